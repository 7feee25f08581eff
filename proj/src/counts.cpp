#include "rankone/counts.hpp"

#include "hierarchy.hpp"
#include "rankone/error.hpp"

#include <algorithm>
#include <ostream>
#include <set>
#include <thread>

namespace rankone {

bool LagCountTable::contains(std::int64_t lag) const {
  return counts.count(lag < 0 ? -lag : lag) > 0;
}

CountMatrix LagCountTable::at(std::int64_t lag) const {
  const auto it = counts.find(lag < 0 ? -lag : lag);
  require(it != counts.end(), ErrorCode::missing_lag,
          "lag " + std::to_string(lag) + " not present in the count table");
  if (lag >= 0) return it->second;
  CountMatrix t(it->second.size());
  const std::size_t a = alphabet_size;
  for (std::size_t i = 0; i < a; ++i)
    for (std::size_t j = 0; j < a; ++j) t[j * a + i] = it->second[i * a + j];
  return t;
}

double CorrMatrix::sum() const {
  double s = 0.0;
  for (double v : values) s += v;
  return s;
}

CorrMatrix CorrMatrix::transposed() const {
  CorrMatrix t = *this;
  t.lag = -lag;
  const std::size_t a = alphabet_size;
  for (std::size_t i = 0; i < a; ++i)
    for (std::size_t j = 0; j < a; ++j) t.values[j * a + i] = values[i * a + j];
  return t;
}

namespace {

struct WordGeometry {
  using Length = std::int64_t;
  using Value = std::uint64_t;

  const Tower& tower;

  int base() const { return tower.base_stage(); }
  int depth() const { return tower.depth(); }
  std::size_t alphabet() const { return tower.alphabet().size(); }
  std::size_t spacer_symbol() const { return tower.alphabet().spacer(); }
  Length length(int k) const { return static_cast<Length>(tower.length(k)); }
  std::size_t copies(int k) const { return static_cast<std::size_t>(tower.stage(k).cuts); }
  Length copy_start(int k, std::size_t i) const {
    return static_cast<Length>(tower.copy_start(k, i));
  }
  Length spacer(int k, std::size_t i) const { return tower.stage(k).spacers[i]; }

  void add_base_pairs(Length d, Value* m) const {
    const auto a = static_cast<Length>(alphabet());
    const auto levels = static_cast<Length>(tower.alphabet().base_levels);
    for (Length s = 0; s + d < levels; ++s) m[s * a + s + d] += 1;
  }
  void add_histogram(int k, Length b, Length e, Value* acc) const {
    const auto h = tower.range_histogram(k, static_cast<std::uint64_t>(b),
                                         static_cast<std::uint64_t>(e));
    for (std::size_t s = 0; s < h.size(); ++s) acc[s] += h[s];
  }
  void add_full_histogram(int k, Value* acc) const {
    const auto& h = tower.histogram(k);
    for (std::size_t s = 0; s < h.size(); ++s) acc[s] += h[s];
  }
};

void check_lag(const Tower& tower, std::int64_t lag) {
  const std::uint64_t mag = lag < 0 ? static_cast<std::uint64_t>(-lag) : static_cast<std::uint64_t>(lag);
  require(mag < tower.length(), ErrorCode::lag_out_of_range,
          "|lag| = " + std::to_string(mag) + " must be < l_J = " + std::to_string(tower.length()));
}

LagCountTable empty_table(const Tower& tower) {
  LagCountTable t;
  t.alphabet_size = tower.alphabet().size();
  t.word_length = tower.length();
  t.base = tower.base_stage();
  t.depth = tower.depth();
  return t;
}

// Counts pairs with left position in [begin, end) for every lag.
void count_range(const Tower& tower, const std::vector<std::int64_t>& lags, std::uint64_t begin,
                 std::uint64_t end, std::size_t block, std::vector<CountMatrix>& out) {
  const std::uint64_t total = tower.length();
  const std::size_t a = tower.alphabet().size();
  std::vector<Symbol> lead(block), trail(block);
  for (std::uint64_t p0 = begin; p0 < end; p0 += block) {
    const std::uint64_t p1 = std::min<std::uint64_t>(end, p0 + block);
    tower.extract(p0, std::span<Symbol>(lead.data(), static_cast<std::size_t>(p1 - p0)));
    for (std::size_t li = 0; li < lags.size(); ++li) {
      const auto n = static_cast<std::uint64_t>(lags[li]);
      if (p0 + n >= total) continue;
      const std::uint64_t stop = std::min<std::uint64_t>(p1, total - n);
      const auto len = static_cast<std::size_t>(stop - p0);
      std::uint64_t* c = out[li].data();
      if (n == 0) {
        for (std::size_t i = 0; i < len; ++i) ++c[lead[i] * a + lead[i]];
        continue;
      }
      tower.extract(p0 + n, std::span<Symbol>(trail.data(), len));
      for (std::size_t i = 0; i < len; ++i) ++c[lead[i] * a + trail[i]];
    }
  }
}

}  // namespace

LagCountTable lag_counts_naive(const Tower& tower, std::span<const std::int64_t> lags,
                               NaiveOptions options) {
  std::set<std::int64_t> unique;
  for (auto lag : lags) {
    require(lag >= 0, ErrorCode::lag_out_of_range, "naive counter takes nonnegative lags");
    check_lag(tower, lag);
    unique.insert(lag);
  }
  const std::vector<std::int64_t> sorted(unique.begin(), unique.end());
  const std::size_t a = tower.alphabet().size();
  const std::uint64_t total = tower.length();
  const unsigned threads =
      static_cast<unsigned>(std::clamp<std::uint64_t>(options.threads, 1, std::max<std::uint64_t>(1, total)));
  const std::size_t block = std::max<std::size_t>(options.block, 1);

  std::vector<std::vector<CountMatrix>> partial(
      threads, std::vector<CountMatrix>(sorted.size(), CountMatrix(a * a, 0)));
  auto work = [&](unsigned t) {
    const std::uint64_t begin = total / threads * t;
    const std::uint64_t end = t + 1 == threads ? total : total / threads * (t + 1);
    count_range(tower, sorted, begin, end, block, partial[t]);
  };
  if (threads == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work, t);
    for (auto& th : pool) th.join();
  }

  LagCountTable table = empty_table(tower);
  for (std::size_t li = 0; li < sorted.size(); ++li) {
    CountMatrix merged(a * a, 0);
    for (const auto& p : partial)
      for (std::size_t i = 0; i < merged.size(); ++i) merged[i] += p[li][i];
    table.counts.emplace(sorted[li], std::move(merged));
  }
  return table;
}

LagCountTable lag_counts_naive(SymbolStream& stream, std::span<const std::int64_t> lags,
                               NaiveOptions options) {
  return lag_counts_naive(stream.tower(), lags, options);
}

CountMatrix lag_count_block(const Tower& tower, std::int64_t lag) {
  check_lag(tower, lag);
  const WordGeometry geometry{tower};
  const detail::HierarchicalPairs<WordGeometry> pairs(geometry);
  if (lag >= 0) return pairs.compute(lag);
  const CountMatrix m = pairs.compute(-lag);
  const std::size_t a = tower.alphabet().size();
  CountMatrix t(m.size());
  for (std::size_t i = 0; i < a; ++i)
    for (std::size_t j = 0; j < a; ++j) t[j * a + i] = m[i * a + j];
  return t;
}

LagCountTable lag_counts_block(const Tower& tower, std::span<const std::int64_t> lags) {
  LagCountTable table = empty_table(tower);
  for (auto lag : lags) {
    require(lag >= 0, ErrorCode::lag_out_of_range, "count tables store nonnegative lags");
    if (!table.counts.count(lag)) table.counts.emplace(lag, lag_count_block(tower, lag));
  }
  return table;
}

CorrMatrix corr_matrix(const LagCountTable& counts, std::int64_t lag) {
  const CountMatrix c = counts.at(lag);
  CorrMatrix d;
  d.lag = lag;
  d.alphabet_size = counts.alphabet_size;
  d.word_length = counts.word_length;
  const double len = static_cast<double>(counts.word_length);
  d.boundary_bound = static_cast<double>(lag < 0 ? -lag : lag) / len;
  d.values.resize(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) d.values[i] = static_cast<double>(c[i]) / len;
  return d;
}

std::vector<CorrMatrix> corr_sequence(const Tower& tower, std::span<const std::int64_t> lags,
                                      Engine engine, NaiveOptions options) {
  std::vector<std::int64_t> order;
  std::set<std::int64_t> magnitudes;
  for (auto lag : lags) {
    check_lag(tower, lag);
    if (std::find(order.begin(), order.end(), lag) == order.end()) order.push_back(lag);
    magnitudes.insert(lag < 0 ? -lag : lag);
  }
  if (engine == Engine::automatic)
    engine = tower.length() <= (std::uint64_t{1} << 16) ? Engine::naive : Engine::block;

  const std::vector<std::int64_t> mags(magnitudes.begin(), magnitudes.end());
  const LagCountTable table = engine == Engine::naive ? lag_counts_naive(tower, mags, options)
                                                      : lag_counts_block(tower, mags);
  std::vector<CorrMatrix> out;
  out.reserve(order.size());
  for (auto lag : order) out.push_back(corr_matrix(table, lag));
  return out;
}

void write_counts_csv(const LagCountTable& table, const Alphabet& alphabet, std::ostream& out) {
  out << "lag,a,b,count\n";
  const std::size_t a = table.alphabet_size;
  for (const auto& [lag, m] : table.counts)
    for (std::size_t i = 0; i < a; ++i)
      for (std::size_t j = 0; j < a; ++j)
        out << lag << ',' << alphabet.label(static_cast<Symbol>(i)) << ','
            << alphabet.label(static_cast<Symbol>(j)) << ',' << m[i * a + j] << '\n';
}

}  // namespace rankone
