#pragma once

// Exact lagged pair counts C(n)[a][b] = #{p : W[p] = a, W[p + n] = b} over
// the depth-J word, and their normalization D(n) = C(n) / l_J.
//
// Orientation: D(n)[a][b] estimates mu(level_a ∩ T^{-n} level_b), i.e. the
// graph joining of the map T^n. The off-diagonal measure mu(A ∩ T^i B) is
// D(-i)[A][B].

#include "rankone/word.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <vector>

namespace rankone {

using CountMatrix = std::vector<std::uint64_t>;  // row-major, alphabet x alphabet

struct LagCountTable {
  std::size_t alphabet_size = 0;
  std::uint64_t word_length = 0;
  int base = 1;
  int depth = 1;
  std::map<std::int64_t, CountMatrix> counts;  // nonnegative lags

  bool contains(std::int64_t lag) const;
  /// C(lag); negative lags are served as the transpose of C(-lag).
  CountMatrix at(std::int64_t lag) const;
};

struct CorrMatrix {
  std::int64_t lag = 0;
  std::size_t alphabet_size = 0;
  std::uint64_t word_length = 0;
  double boundary_bound = 0.0;  // |lag| / l_J
  std::vector<double> values;

  double operator()(std::size_t a, std::size_t b) const { return values[a * alphabet_size + b]; }
  double sum() const;
  CorrMatrix transposed() const;
};

enum class Engine { automatic, naive, block };

struct NaiveOptions {
  unsigned threads = 1;
  std::size_t block = std::size_t{1} << 16;
};

/// Definitional counter: reads the word in blocks with one trailing cursor
/// per lag. Lags must be nonnegative and < l_J. Counts do not depend on the
/// thread count.
LagCountTable lag_counts_naive(const Tower& tower, std::span<const std::int64_t> lags,
                               NaiveOptions options = {});
LagCountTable lag_counts_naive(SymbolStream& stream, std::span<const std::int64_t> lags,
                               NaiveOptions options = {});

/// Hierarchical counter; identical integers to lag_counts_naive.
CountMatrix lag_count_block(const Tower& tower, std::int64_t lag);
LagCountTable lag_counts_block(const Tower& tower, std::span<const std::int64_t> lags);

CorrMatrix corr_matrix(const LagCountTable& counts, std::int64_t lag);

/// One matrix per distinct lag, in first-occurrence order. Lags may be
/// negative; |lag| < l_J.
std::vector<CorrMatrix> corr_sequence(const Tower& tower, std::span<const std::int64_t> lags,
                                      Engine engine = Engine::automatic,
                                      NaiveOptions options = {});

/// Rows: lag,a,b,count (all stored lags).
void write_counts_csv(const LagCountTable& table, const Alphabet& alphabet, std::ostream& out);

}  // namespace rankone
