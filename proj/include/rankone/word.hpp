#pragma once

// The depth-J tower read as a word over the levels of the base tower j0
// plus a spacer symbol. `Tower` is the implicit (never materialized)
// hierarchical description; `SymbolStream` reads it left to right.

#include "rankone/schedule.hpp"

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace rankone {

using Symbol = std::uint16_t;

struct Alphabet {
  std::size_t base_levels = 1;  // l_{j0}

  std::size_t size() const noexcept { return base_levels + 1; }
  Symbol spacer() const noexcept { return static_cast<Symbol>(base_levels); }
  std::string label(Symbol s) const;
};

struct SymbolWord {
  std::vector<Symbol> symbols;
  int stage = 1;
  int base = 1;
  Alphabet alphabet;

  std::size_t size() const noexcept { return symbols.size(); }
  /// Digits for base levels, '*' for the spacer, '|' between multi-digit codes.
  std::string to_string() const;
};

/// Largest base alphabet accepted (symbols are 16-bit codes).
inline constexpr std::uint64_t kMaxBaseLevels = 4096;
/// Words longer than this cannot be counted with 64-bit integers.
inline constexpr std::uint64_t kMaxWordLength = std::uint64_t{1} << 62;

class Tower {
 public:
  /// Hierarchical view of W_depth over base stage j0. Throws
  /// DepthOverBudget when l_depth >= kMaxWordLength.
  Tower(const RealizedSchedule& realized, int base_stage, int depth);
  Tower(const RealizedSchedule& realized, int base_stage)
      : Tower(realized, base_stage, realized.depth()) {}

  int base_stage() const noexcept { return base_; }
  int depth() const noexcept { return depth_; }
  const Alphabet& alphabet() const noexcept { return alphabet_; }
  const std::string& name() const noexcept { return name_; }

  /// l_k for base_stage <= k <= depth.
  std::uint64_t length(int k) const { return lengths_.at(index(k)); }
  std::uint64_t length() const { return lengths_.back(); }
  /// Cut count and spacers used to build stage k+1 from stage k.
  const Stage& stage(int k) const { return stages_.at(index(k)); }
  /// Start of copy i (0-based) of W_k inside W_{k+1}.
  std::uint64_t copy_start(int k, std::size_t i) const { return starts_.at(index(k)).at(i); }
  const std::vector<std::uint64_t>& copy_starts(int k) const { return starts_.at(index(k)); }

  Symbol symbol_at(std::uint64_t pos) const;
  /// W_k[pos, pos + out.size()).
  void extract(int k, std::uint64_t pos, std::span<Symbol> out) const;
  void extract(std::uint64_t pos, std::span<Symbol> out) const { extract(depth_, pos, out); }

  /// Occurrence counts of every symbol in W_k.
  const std::vector<std::uint64_t>& histogram(int k) const { return hist_.at(index(k)); }
  /// Adds the occurrence counts of W_k[0, t) into `acc`.
  void add_prefix_histogram(int k, std::uint64_t t, std::span<std::uint64_t> acc) const;
  /// Occurrence counts of W_k[begin, end).
  std::vector<std::uint64_t> range_histogram(int k, std::uint64_t begin, std::uint64_t end) const;

 private:
  std::size_t index(int k) const;
  void build_cache(std::uint64_t limit);

  std::string name_;
  int base_ = 1;
  int depth_ = 1;
  Alphabet alphabet_;
  std::vector<std::uint64_t> lengths_;
  std::vector<Stage> stages_;
  std::vector<std::vector<std::uint64_t>> starts_;
  std::vector<std::vector<std::uint64_t>> hist_;
  int cache_stage_ = 1;
  std::vector<Symbol> cache_;  // materialized W_{cache_stage_}
};

struct StreamOptions {
  std::size_t chunk = std::size_t{1} << 16;
  std::uint64_t symbol_budget = std::uint64_t{1} << 40;
};

/// Single-consumer chunked reader of W_J. Chunks split at arbitrary
/// positions.
class SymbolStream {
 public:
  SymbolStream(std::shared_ptr<const Tower> tower, StreamOptions options = {});

  std::uint64_t total_length() const noexcept { return tower_->length(); }
  std::uint64_t position() const noexcept { return pos_; }
  void seek(std::uint64_t pos);
  /// Next chunk, empty at the end. Valid until the next call.
  std::span<const Symbol> next();
  /// Reads up to out.size() symbols; returns the count read.
  std::size_t read(std::span<Symbol> out);
  const Tower& tower() const noexcept { return *tower_; }

 private:
  std::shared_ptr<const Tower> tower_;
  std::vector<Symbol> buffer_;
  std::uint64_t pos_ = 0;
};

SymbolWord base_word(const RealizedSchedule& realized, int base_stage);
SymbolWord expand_once(const SymbolWord& word, std::int64_t cuts,
                       std::span<const std::int64_t> spacers);
/// W_J by iterated expand_once (small depths only).
SymbolWord materialize(const RealizedSchedule& realized, int depth, int base_stage);
SymbolStream stream_word(const RealizedSchedule& realized, int depth, int base_stage,
                         StreamOptions options = {});

struct Windows {
  std::vector<Symbol> prefix;
  std::vector<Symbol> suffix;
};

/// First and last `length` symbols of W_stage, maintained stage by stage.
Windows prefix_suffix(const RealizedSchedule& realized, int stage, int base_stage,
                      std::uint64_t length);

struct LevelMeasures {
  std::vector<std::uint64_t> counts;
  std::uint64_t word_length = 0;

  double mass(std::size_t symbol) const {
    return static_cast<double>(counts.at(symbol)) / static_cast<double>(word_length);
  }
  std::vector<double> masses() const;
};

LevelMeasures level_measures(const Tower& tower);
LevelMeasures level_measures(const RealizedSchedule& realized, int depth, int base_stage);

/// Least stage j0 with l_{j0} in [8, 64]; falls back to the largest stage
/// with l <= 64, then to stage 1.
int default_base_stage(const RealizedSchedule& realized);

/// One symbol code per line.
void dump_word(SymbolStream& stream, std::ostream& out);

}  // namespace rankone
