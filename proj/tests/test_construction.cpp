#include "rankone/error.hpp"
#include "rankone/schedule.hpp"
#include "rankone/word.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace rankone;

namespace {

std::vector<BigInt> big(std::initializer_list<long> xs) {
  std::vector<BigInt> out;
  for (long x : xs) out.emplace_back(x);
  return out;
}

ErrorCode code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::invalid_argument;
}

ConstructionSchedule transformation(std::int64_t r, std::vector<std::int64_t> pattern) {
  ConstructionSchedule s;
  s.name = "test";
  s.cuts = CutRule::constant(r);
  s.spacers = SpacerRule::repeat(std::move(pattern));
  return s;
}

std::string word(const RealizedSchedule& r, int depth, int base) {
  return materialize(r, depth, base).to_string();
}

}  // namespace

TEST_SUITE("schedule") {
  TEST_CASE("validate accepts the Chacon recipes") {
    CHECK_NOTHROW(validate(transformation(3, {0, 1, 0})));
    CHECK_NOTHROW(validate(transformation(2, {0, 1})));
  }

  TEST_CASE("validate rejects bad rules") {
    CHECK(code_of([] { validate(transformation(1, {0})); }) == ErrorCode::non_positive_cut);
    CHECK(code_of([] { validate(transformation(2, {0, -1})); }) == ErrorCode::negative_spacer);
    CHECK(code_of([] { validate(transformation(3, {0, 1})); }) == ErrorCode::malformed_rule);
    ConstructionSchedule s = transformation(3, {0, 0, 0});
    s.spacers = SpacerRule::bernoulli(1.0);
    CHECK(code_of([&] { validate(s); }) == ErrorCode::malformed_rule);
    s.spacers = SpacerRule::bernoulli(0.0);
    CHECK(code_of([&] { validate(s); }) == ErrorCode::malformed_rule);
  }

  TEST_CASE("declared bounds are enforced") {
    ConstructionSchedule s = transformation(5, {2, 2, 2, 2, 0});
    s.bounds = Bounds{3, 6, std::nullopt};
    CHECK_NOTHROW(validate(s));
    s.bounds = Bounds{2, 6, std::nullopt};
    CHECK(code_of([&] { validate(s); }) == ErrorCode::bounds_violated);
  }

  TEST_CASE("heights of the catalog examples") {
    CHECK(heights(catalog("chacon"), 5).levels == big({1, 3, 7, 15, 31}));
    CHECK(heights(catalog("modified-chacon"), 4).levels == big({1, 4, 13, 40}));
    CHECK(heights(catalog("dyadic-odometer"), 5).levels == big({1, 2, 4, 8, 16}));
    CHECK(heights(catalog("spaced-odometer5"), 3).levels == big({1, 13, 73}));
  }

  TEST_CASE("closed forms hold to depth 200") {
    const auto c = heights(catalog("chacon"), 200);
    const auto m = heights(catalog("modified-chacon"), 200);
    for (int j = 1; j <= 200; ++j) {
      const BigInt p2 = BigInt(1) << j;
      BigInt p3 = 1;
      for (int i = 0; i < j; ++i) p3 *= 3;
      REQUIRE(c.at(j) == p2 - 1);
      REQUIRE(m.at(j) == (p3 - 1) / 2);
    }
  }

  TEST_CASE("staircase flow heights") {
    const auto h = flow_heights(realize_flow(catalog("staircase-flow"), 3));
    REQUIRE(h.size() == 3);
    CHECK(h[0] == Rational(1));
    CHECK(h[1] == Rational(5, 2));
    CHECK(h[2] == Rational(17, 2));

    ConstructionSchedule s;
    s.kind = Kind::flow;
    s.h1 = 1;
    s.cuts = CutRule::constant(2);
    s.spacers = SpacerRule::staircase();
    const auto f = flow_heights(realize_flow(validate(s), 6));
    for (std::size_t j = 1; j < f.size(); ++j) CHECK(f[j] == 2 * f[j - 1] + Rational(1, 2));

    s.spacers = SpacerRule::repeat({0, 0});
    const auto z = flow_heights(realize_flow(validate(s), 6));
    for (std::size_t j = 1; j < z.size(); ++j) CHECK(z[j] == 2 * z[j - 1]);
  }

  TEST_CASE("catalog recipes") {
    const auto m = catalog("modified-chacon");
    CHECK(m.cuts(4) == 3);
    CHECK(m.spacers(4) == std::vector<std::int64_t>{0, 1, 0});
    const auto o = catalog("spaced-odometer5");
    CHECK(o.cuts(1) == 5);
    CHECK(o.spacers(1) == std::vector<std::int64_t>{2, 2, 2, 2, 0});
    const auto d = catalog("dyadic-odometer");
    CHECK(d.spacers(7) == std::vector<std::int64_t>{0, 0});
    CHECK(catalog("stochastic-chacon").is_stochastic());
    CHECK(catalog("stochastic-chacon").cuts(5) == 6);
    CHECK(code_of([] { catalog("no-such"); }) == ErrorCode::unknown_name);
    CHECK(code_of([] { realize(catalog("stochastic-chacon"), 4); }) == ErrorCode::unrealized_stochastic);
  }

  TEST_CASE("stochastic realization") {
    const auto v = catalog("stochastic-chacon");
    const auto a = realize_stochastic(v, 42, 10);
    const auto b = realize_stochastic(v, 42, 10);
    std::size_t ones = 0, draws = 0;
    for (int j = 1; j < 10; ++j) {
      CHECK(a.stage(j).spacers == b.stage(j).spacers);
      for (auto s : a.stage(j).spacers) {
        CHECK((s == 0 || s == 1));
        ones += static_cast<std::size_t>(s);
        ++draws;
      }
    }
    CHECK(draws == 54);
    const double sigma = std::sqrt(0.25 / static_cast<double>(draws));
    CHECK(std::abs(static_cast<double>(ones) / static_cast<double>(draws) - 0.5) <= 5 * sigma);

    // deeper realizations extend shallower ones
    const auto deep = realize_stochastic(v, 42, 14);
    for (int j = 1; j < 10; ++j) CHECK(deep.stage(j).spacers == a.stage(j).spacers);
    const auto other = realize_stochastic(v, 43, 10);
    bool differs = false;
    for (int j = 1; j < 10; ++j) differs |= other.stage(j).spacers != a.stage(j).spacers;
    CHECK(differs);
  }

  TEST_CASE("observable mass") {
    const auto c = observable_mass(realize(catalog("chacon"), 3), 1);
    CHECK(c.word_length == 7);
    CHECK(c.width_ratio == Rational(1, 4));
    CHECK(observable_mass(realize(catalog("chacon"), 3), 3).width_ratio == Rational(1));
    const auto m = observable_mass(realize(catalog("modified-chacon"), 3), 1);
    CHECK(m.word_length == 13);
    CHECK(m.width_ratio == Rational(1, 9));
  }
}

TEST_SUITE("word") {
  TEST_CASE("base words are the identity word") {
    CHECK(base_word(realize(catalog("chacon"), 4), 1).to_string() == "0");
    CHECK(base_word(realize(catalog("modified-chacon"), 4), 2).to_string() == "0123");
    CHECK(base_word(realize(catalog("chacon"), 4), 3).to_string() == "0123456");
  }

  TEST_CASE("substitution steps") {
    const auto r = realize(catalog("chacon"), 4);
    const auto w0 = base_word(r, 1);
    const std::vector<std::int64_t> chacon{0, 1}, modified{0, 1, 0};
    const auto w1 = expand_once(w0, 2, chacon);
    CHECK(w1.to_string() == "00*");
    CHECK(expand_once(w0, 3, modified).to_string() == "00*0");
    CHECK(expand_once(w1, 2, chacon).to_string() == "00*00**");
  }

  TEST_CASE("streams agree with materialized words") {
    const auto r = realize(catalog("chacon"), 3);
    CHECK(word(r, 3, 1) == "00*00**");
    CHECK(word(r, 1, 1) == base_word(r, 1).to_string());

    for (const auto& name : {"chacon", "modified-chacon", "spaced-odometer5", "dyadic-odometer"}) {
      const auto rr = realize(catalog(name), 7);
      const auto hs = heights(rr);
      for (int j0 = 1; j0 <= 3; ++j0) {
        const auto full = materialize(rr, 7, j0);
        REQUIRE(full.size() == static_cast<std::size_t>(hs.at(7)));
        auto stream = stream_word(rr, 7, j0, StreamOptions{37, std::uint64_t{1} << 30});
        std::vector<Symbol> got;
        for (auto chunk = stream.next(); !chunk.empty(); chunk = stream.next())
          got.insert(got.end(), chunk.begin(), chunk.end());
        CHECK(got == full.symbols);
        const Tower t(rr, j0, 7);
        for (std::uint64_t p = 0; p < full.size(); p += 5) CHECK(t.symbol_at(p) == full.symbols[p]);
      }
    }
  }

  TEST_CASE("prefix and suffix windows") {
    const auto c = realize(catalog("chacon"), 3);
    const auto w = prefix_suffix(c, 3, 1, 2);
    CHECK(w.prefix == std::vector<Symbol>{0, 0});
    CHECK(w.suffix == std::vector<Symbol>{1, 1});
    const auto whole = prefix_suffix(c, 3, 1, 7);
    CHECK(whole.prefix == materialize(c, 3, 1).symbols);
    CHECK(whole.suffix == materialize(c, 3, 1).symbols);
    const auto m = prefix_suffix(realize(catalog("modified-chacon"), 2), 2, 1, 1);
    CHECK(m.prefix == std::vector<Symbol>{0});
    CHECK(m.suffix == std::vector<Symbol>{0});
  }

  TEST_CASE("level measures") {
    const auto c = level_measures(realize(catalog("chacon"), 3), 3, 1);
    CHECK(c.counts == std::vector<std::uint64_t>{4, 3});
    CHECK(c.word_length == 7);

    const auto d = level_measures(realize(catalog("dyadic-odometer"), 9), 9, 4);
    CHECK(d.counts.back() == 0);
    for (std::size_t a = 0; a + 1 < d.counts.size(); ++a) CHECK(d.mass(a) == doctest::Approx(1.0 / 8));

    const auto m = level_measures(realize(catalog("modified-chacon"), 8), 8, 2);
    for (std::size_t a = 0; a + 1 < m.counts.size(); ++a) CHECK(m.counts[a] == 729);  // 3^6 copies
  }

  TEST_CASE("default base stage") {
    CHECK(default_base_stage(realize(catalog("chacon"), 10)) == 4);           // l = 15
    CHECK(default_base_stage(realize(catalog("modified-chacon"), 10)) == 3);  // l = 13
    CHECK(default_base_stage(realize(catalog("dyadic-odometer"), 10)) == 4);  // l = 8
  }

  TEST_CASE("word length limit") {
    CHECK(code_of([] { Tower(realize(catalog("chacon"), 70), 1, 70); }) == ErrorCode::depth_over_budget);
  }
}
