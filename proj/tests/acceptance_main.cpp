// Runs every acceptance criterion and prints one PASS/FAIL line each.

#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "phnls/acceptance.hpp"

int main(int argc, char** argv) {
  CLI::App app{"phnls acceptance gate"};
  std::string work = (std::filesystem::temp_directory_path() / "phnls-acceptance").string();
  std::string suite = "acceptance";
  app.add_option("--work", work, "scratch directory for the shared runs");
  app.add_option("--suite", suite, "suite name")->check(CLI::IsMember(phnls::acceptance::suite_names()));
  CLI11_PARSE(app, argc, argv);

  std::filesystem::create_directories(work);
  int failed = 0;
  try {
    const auto results = phnls::acceptance::run_suite(suite, work, [](const auto& r) {
      std::cout << phnls::acceptance::format_line(r) << std::endl;
    });
    for (const auto& r : results) failed += !r.pass;
    std::cout << (failed ? "FAILED " : "PASSED ") << results.size() - failed << "/" << results.size()
              << " criteria" << std::endl;
  } catch (const std::exception& e) {
    std::cerr << "phnls_acceptance: " << e.what() << "\n";
    return 2;
  }
  return failed ? 1 : 0;
}
