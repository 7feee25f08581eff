#include "rankone/counts.hpp"
#include "rankone/error.hpp"

#include <doctest.h>

#include <random>
#include <sstream>

using namespace rankone;

namespace {

constexpr std::size_t kStar = 1;  // spacer code over a one-level base

// Position-by-position scan of a materialized word.
CountMatrix brute_counts(const SymbolWord& w, std::int64_t lag) {
  const std::size_t a = w.alphabet.size();
  CountMatrix c(a * a, 0);
  const std::int64_t n = static_cast<std::int64_t>(w.size());
  for (std::int64_t p = 0; p < n; ++p) {
    const std::int64_t q = p + lag;
    if (q < 0 || q >= n) continue;
    ++c[w.symbols[static_cast<std::size_t>(p)] * a + w.symbols[static_cast<std::size_t>(q)]];
  }
  return c;
}

std::shared_ptr<Tower> tower(const std::string& name, int j0, int depth) {
  return std::make_shared<Tower>(realize(catalog(name), depth), j0, depth);
}

}  // namespace

TEST_SUITE("counts") {
  TEST_CASE("hand counts on the depth-3 Chacon word") {
    const auto t = tower("chacon", 1, 3);
    const std::int64_t lags[] = {1, 3};
    const auto table = lag_counts_naive(*t, lags);
    const auto c1 = table.at(1);
    CHECK(c1[0 * 2 + 0] == 2);
    CHECK(c1[0 * 2 + kStar] == 2);
    CHECK(c1[kStar * 2 + 0] == 1);
    CHECK(c1[kStar * 2 + kStar] == 1);
    // lag 3 pairs (0,3),(1,4),(2,5),(3,6) read (0,0),(0,0),(*,*),(0,*)
    const auto c3 = table.at(3);
    CHECK(c3[0 * 2 + 0] == 2);
    CHECK(c3[0 * 2 + kStar] == 1);
    CHECK(c3[kStar * 2 + kStar] == 1);
    CHECK(c3[kStar * 2 + 0] == 0);
    CHECK(lag_count_block(*t, 3) == c3);
    CHECK(lag_count_block(*t, 1) == c1);
  }

  TEST_CASE("lag zero is the diagonal histogram") {
    const auto t = tower("modified-chacon", 2, 6);
    const auto c = lag_count_block(*t, 0);
    const std::size_t a = t->alphabet().size();
    const auto& h = t->histogram(6);
    for (std::size_t i = 0; i < a; ++i)
      for (std::size_t j = 0; j < a; ++j) CHECK(c[i * a + j] == (i == j ? h[i] : 0));
  }

  TEST_CASE("block, naive and brute force agree") {
    std::mt19937_64 rng(11);
    for (const auto& name : {"chacon", "modified-chacon", "spaced-odometer5", "dyadic-odometer"}) {
      for (int J = 1; J <= 7; ++J) {
        const auto r = realize(catalog(name), J);
        const auto hs = heights(r);
        for (int j0 = 1; j0 <= J && hs.at(j0) <= 4096; ++j0) {
          const Tower t(r, j0, J);
          const auto w = materialize(r, J, j0);
          const auto n = static_cast<std::int64_t>(w.size());
          std::vector<std::int64_t> lags{0, n - 1};
          for (int i = 0; i < 6; ++i) lags.push_back(static_cast<std::int64_t>(rng() % static_cast<std::uint64_t>(n)));
          const auto naive = lag_counts_naive(t, lags);
          for (auto lag : lags) {
            const auto expect = brute_counts(w, lag);
            REQUIRE(naive.at(lag) == expect);
            REQUIRE(lag_count_block(t, lag) == expect);
            REQUIRE(lag_count_block(t, -lag) == brute_counts(w, -lag));
          }
        }
      }
    }
  }

  TEST_CASE("block-length lags at depth 10") {
    const auto t = tower("chacon", 1, 10);
    const std::int64_t l9 = static_cast<std::int64_t>(t->length(9));
    const std::int64_t lags[] = {1, l9 - 1, l9, l9 + 1};
    const auto naive = lag_counts_naive(*t, lags);
    for (auto lag : lags) CHECK(lag_count_block(*t, lag) == naive.at(lag));
  }

  TEST_CASE("thread count does not change naive counts") {
    const auto t = tower("modified-chacon", 3, 9);
    const std::int64_t lags[] = {0, 1, 2, 13, 40, 121, 364, 1093};
    NaiveOptions one{1, 1000}, four{4, 777};
    const auto a = lag_counts_naive(*t, lags, one);
    const auto b = lag_counts_naive(*t, lags, four);
    for (auto lag : lags) CHECK(a.at(lag) == b.at(lag));
  }

  TEST_CASE("dyadic odometer seams") {
    // pure concatenation: D(l_j) is the identity pattern minus l_j / l_J
    const auto t = tower("dyadic-odometer", 4, 12);
    const std::size_t a = t->alphabet().size();
    for (int j = 4; j <= 11; ++j) {
      const auto lj = t->length(j);
      const auto c = lag_count_block(*t, static_cast<std::int64_t>(lj));
      std::uint64_t diag = 0, off = 0;
      for (std::size_t x = 0; x < a; ++x)
        for (std::size_t y = 0; y < a; ++y) (x == y ? diag : off) += c[x * a + y];
      CHECK(off == 0);
      CHECK(diag == t->length() - lj);
    }
  }

  TEST_CASE("lag range is checked") {
    const auto t = tower("chacon", 1, 4);
    CHECK_THROWS_AS(lag_count_block(*t, 15), Error);
    const std::int64_t bad[] = {-1};
    CHECK_THROWS_AS(lag_counts_naive(*t, bad), Error);
  }
}

TEST_SUITE("corr") {
  TEST_CASE("normalized depth-3 Chacon matrices") {
    const auto t = tower("chacon", 1, 3);
    const std::int64_t lags[] = {1, 0, -1};
    const auto seq = corr_sequence(*t, lags);
    REQUIRE(seq.size() == 3);
    CHECK(seq[0](0, 0) == doctest::Approx(2.0 / 7));
    CHECK(seq[0](0, kStar) == doctest::Approx(2.0 / 7));
    CHECK(seq[0](kStar, 0) == doctest::Approx(1.0 / 7));
    CHECK(seq[0](kStar, kStar) == doctest::Approx(1.0 / 7));
    CHECK(seq[0].boundary_bound == doctest::Approx(1.0 / 7));
    CHECK(seq[1](0, 0) == doctest::Approx(4.0 / 7));
    CHECK(seq[1](0, kStar) == 0.0);
    CHECK(seq[1](kStar, kStar) == doctest::Approx(3.0 / 7));
    CHECK(seq[2].values == seq[0].transposed().values);
    CHECK(seq[2].lag == -1);
  }

  TEST_CASE("duplicates collapse, order follows input") {
    const auto t = tower("modified-chacon", 2, 7);
    const std::int64_t lags[] = {40, 4, 40, -13, 4};
    const auto seq = corr_sequence(*t, lags);
    REQUIRE(seq.size() == 3);
    CHECK(seq[0].lag == 40);
    CHECK(seq[1].lag == 4);
    CHECK(seq[2].lag == -13);
    const std::int64_t zero[] = {0};
    CHECK(corr_sequence(*t, zero).size() == 1);
  }

  TEST_CASE("engines give identical matrices") {
    const auto t = tower("chacon", 3, 12);
    const std::int64_t l11 = static_cast<std::int64_t>(t->length(11));
    const std::int64_t lags[] = {1, l11, -l11, 77};
    const auto a = corr_sequence(*t, lags, Engine::naive);
    const auto b = corr_sequence(*t, lags, Engine::block);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].values == b[i].values);
  }

  TEST_CASE("counts CSV") {
    const auto t = tower("chacon", 1, 3);
    const std::int64_t lags[] = {1};
    std::ostringstream out;
    write_counts_csv(lag_counts_block(*t, lags), t->alphabet(), out);
    const std::string s = out.str();
    CHECK(s.rfind("lag,a,b,count\n", 0) == 0);
    CHECK(s.find("1,0,*,2\n") != std::string::npos);
  }
}
