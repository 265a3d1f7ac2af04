#include <gtest/gtest.h>

#include "phnls/config.hpp"

using namespace phnls;

namespace {

const char* kSample = R"(# sample
[domain]
d = 1
L = 24.0
n_x = 512
n_max = 16        # q defaults to 2 n_max
alpha = 5
omega = 1.0

[initial]
kind = "ground_state"
scale = 0.9

[run]
t_max = 2.5

[step]
dt = 0.005
snapshot_times = [0.5, 1.0]

[morawetz]
enabled = true
R = [2, 4]
s = [-1.0, 0.0, 1.0]
)";

}  // namespace

TEST(Config, ParsesSample) {
  const auto c = parse_config(kSample);
  EXPECT_EQ(c.domain.L, 24.0);
  EXPECT_EQ(c.domain.n_x, 512);
  EXPECT_EQ(c.domain.q, 32);
  EXPECT_EQ(c.domain.alpha, 5.0);
  EXPECT_EQ(c.initial.kind, InitialSpec::Kind::ground_state);
  EXPECT_EQ(c.initial.scale, 0.9);
  EXPECT_EQ(c.t_max, 2.5);
  EXPECT_EQ(c.step.snapshot_times, (std::vector<double>{0.5, 1.0}));
  EXPECT_TRUE(c.morawetz.enabled);
  EXPECT_EQ(c.morawetz.R, (std::vector<double>{2.0, 4.0}));
  EXPECT_EQ(c.morawetz.s.size(), 3u);
}

TEST(Config, CanonicalTextRoundTrips) {
  const auto c = parse_config(kSample);
  const std::string text = to_text(c);
  const auto again = parse_config(text);
  EXPECT_EQ(to_text(again), text);
  EXPECT_EQ(config_hash(again), config_hash(c));
  auto other = c;
  other.step.dt = 0.0050000000000000001 * 1.5;
  EXPECT_NE(config_hash(other), config_hash(c));
}

TEST(Config, DefaultsRoundTrip) {
  const auto c = parse_config("");
  EXPECT_EQ(to_text(parse_config(to_text(c))), to_text(c));
}

TEST(Config, Errors) {
  EXPECT_THROW(parse_config("[domain]\nbogus = 1\n"), FormatError);
  EXPECT_THROW(parse_config("[domain]\nn_x = 2.5\n"), FormatError);
  EXPECT_THROW(parse_config("[domain]\nL = abc\n"), FormatError);
  EXPECT_THROW(parse_config("[initial]\nkind = \"soliton\"\n"), FormatError);
  EXPECT_THROW(parse_config("[step]\nadapt = yes\n"), FormatError);
  EXPECT_THROW(parse_config("[step]\nsnapshot_times = 1.0\n"), FormatError);
  EXPECT_THROW(parse_config("[domain\nL = 1\n"), FormatError);
  EXPECT_THROW(parse_config("[domain]\nn_x = 100\n"), InvalidArgument);
  EXPECT_THROW(parse_config("[initial]\nkind = \"file\"\n"), InvalidArgument);
  EXPECT_THROW(load_config("/nonexistent/phnls.toml"), Error);
}

TEST(Config, QuotedHashIsNotAComment) {
  const auto c = parse_config("[initial]\nkind = \"file\"\npath = \"a#b.phnl\" # trailing\n");
  EXPECT_EQ(c.initial.path, "a#b.phnl");
}
