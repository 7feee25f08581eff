#include "rankone/word.hpp"

#include "rankone/error.hpp"

#include <algorithm>
#include <ostream>

namespace rankone {

std::string Alphabet::label(Symbol s) const {
  return s == spacer() ? std::string("*") : std::to_string(s);
}

std::string SymbolWord::to_string() const {
  std::string out;
  const bool separate = alphabet.base_levels > 10;
  for (std::size_t i = 0; i < symbols.size(); ++i) {
    if (separate && i > 0) out.push_back('|');
    out += alphabet.label(symbols[i]);
  }
  return out;
}

// ---- Tower ---------------------------------------------------------------

namespace {

constexpr std::uint64_t kCacheLimit = std::uint64_t{1} << 20;

std::uint64_t checked_length(unsigned __int128 value, const std::string& name, int stage) {
  require(value < kMaxWordLength, ErrorCode::depth_over_budget,
          "l_" + std::to_string(stage) + " of '" + name + "' exceeds the 2^62 counting limit");
  return static_cast<std::uint64_t>(value);
}

}  // namespace

Tower::Tower(const RealizedSchedule& realized, int base_stage, int depth)
    : name_(realized.name), base_(base_stage), depth_(depth) {
  require(base_stage >= 1 && base_stage <= depth, ErrorCode::invalid_argument,
          "base stage must satisfy 1 <= j0 <= J");
  require(depth <= realized.depth(), ErrorCode::invalid_argument,
          "schedule realized only to depth " + std::to_string(realized.depth()));

  unsigned __int128 len = static_cast<unsigned __int128>(realized.levels1());
  for (int k = 1; k < base_stage; ++k) {
    const auto& st = realized.stage(k);
    len = len * static_cast<unsigned __int128>(st.cuts) +
          static_cast<unsigned __int128>(st.spacer_sum());
    require(len <= kMaxBaseLevels, ErrorCode::depth_over_budget,
            "base stage " + std::to_string(base_stage) + " has more than " +
                std::to_string(kMaxBaseLevels) + " levels");
  }
  require(len <= kMaxBaseLevels, ErrorCode::depth_over_budget, "base tower too tall");
  alphabet_.base_levels = static_cast<std::size_t>(len);
  lengths_.push_back(static_cast<std::uint64_t>(len));

  std::vector<std::uint64_t> h(alphabet_.size(), 1);
  h[alphabet_.spacer()] = 0;
  hist_.push_back(h);

  for (int k = base_stage; k < depth; ++k) {
    const Stage& st = realized.stage(k);
    stages_.push_back(st);
    const std::uint64_t child = lengths_.back();
    std::vector<std::uint64_t> starts;
    starts.reserve(static_cast<std::size_t>(st.cuts));
    unsigned __int128 at = 0;
    for (std::int64_t i = 0; i < st.cuts; ++i) {
      starts.push_back(checked_length(at, name_, k + 1));
      at += child + static_cast<std::uint64_t>(st.spacers[static_cast<std::size_t>(i)]);
    }
    lengths_.push_back(checked_length(at, name_, k + 1));
    starts_.push_back(std::move(starts));

    std::vector<std::uint64_t> next(hist_.back());
    for (auto& c : next) c *= static_cast<std::uint64_t>(st.cuts);
    next[alphabet_.spacer()] += static_cast<std::uint64_t>(st.spacer_sum());
    hist_.push_back(std::move(next));
  }
  build_cache(kCacheLimit);
}

std::size_t Tower::index(int k) const {
  require(k >= base_ && k <= depth_, ErrorCode::invalid_argument,
          "stage " + std::to_string(k) + " outside [" + std::to_string(base_) + ", " +
              std::to_string(depth_) + "]");
  return static_cast<std::size_t>(k - base_);
}

void Tower::build_cache(std::uint64_t limit) {
  cache_stage_ = base_;
  while (cache_stage_ < depth_ && length(cache_stage_ + 1) <= limit) ++cache_stage_;
  cache_.resize(static_cast<std::size_t>(length(cache_stage_)));
  for (std::size_t i = 0; i < alphabet_.base_levels; ++i) cache_[i] = static_cast<Symbol>(i);
  for (int k = base_; k < cache_stage_; ++k) {
    const std::size_t child = static_cast<std::size_t>(length(k));
    const auto& st = stage(k);
    const auto& starts = copy_starts(k);
    // Copies are written back to front so the source prefix stays intact.
    for (std::size_t i = starts.size(); i-- > 0;) {
      const std::size_t at = static_cast<std::size_t>(starts[i]);
      if (i > 0) std::copy_n(cache_.begin(), child, cache_.begin() + static_cast<std::ptrdiff_t>(at));
      std::fill_n(cache_.begin() + static_cast<std::ptrdiff_t>(at + child),
                  static_cast<std::size_t>(st.spacers[i]), alphabet_.spacer());
    }
  }
}

void Tower::extract(int k, std::uint64_t pos, std::span<Symbol> out) const {
  require(pos + out.size() <= length(k), ErrorCode::lag_out_of_range,
          "extract beyond the end of W_" + std::to_string(k));
  while (!out.empty()) {
    if (k <= cache_stage_) {
      std::copy_n(cache_.begin() + static_cast<std::ptrdiff_t>(pos), out.size(), out.begin());
      return;
    }
    const auto& starts = copy_starts(k - 1);
    const std::uint64_t child = length(k - 1);
    const auto it = std::upper_bound(starts.begin(), starts.end(), pos) - 1;
    const auto i = static_cast<std::size_t>(it - starts.begin());
    const std::uint64_t off = pos - *it;
    std::size_t n = 0;
    if (off < child) {
      n = static_cast<std::size_t>(std::min<std::uint64_t>(out.size(), child - off));
      extract(k - 1, off, out.first(n));
    } else {
      const auto run = static_cast<std::uint64_t>(stage(k - 1).spacers[i]) - (off - child);
      n = static_cast<std::size_t>(std::min<std::uint64_t>(out.size(), run));
      std::fill_n(out.begin(), n, alphabet_.spacer());
    }
    out = out.subspan(n);
    pos += n;
  }
}

Symbol Tower::symbol_at(std::uint64_t pos) const {
  Symbol s = 0;
  extract(pos, std::span<Symbol>(&s, 1));
  return s;
}

void Tower::add_prefix_histogram(int k, std::uint64_t t, std::span<std::uint64_t> acc) const {
  require(t <= length(k), ErrorCode::lag_out_of_range, "prefix longer than the word");
  const Symbol spacer = alphabet_.spacer();
  while (t > 0) {
    if (k == base_) {
      for (std::uint64_t s = 0; s < t; ++s) ++acc[s];
      return;
    }
    if (t == length(k)) {
      const auto& h = histogram(k);
      for (std::size_t s = 0; s < h.size(); ++s) acc[s] += h[s];
      return;
    }
    const auto& starts = copy_starts(k - 1);
    const std::uint64_t child = length(k - 1);
    const auto it = std::upper_bound(starts.begin(), starts.end(), t) - 1;
    const auto i = static_cast<std::uint64_t>(it - starts.begin());
    if (i > 0) {
      const auto& h = histogram(k - 1);
      for (std::size_t s = 0; s < h.size(); ++s) acc[s] += i * h[s];
      acc[spacer] += *it - i * child;  // spacers of the first i columns
    }
    const std::uint64_t off = t - *it;
    if (off <= child) {
      t = off;
      --k;
    } else {
      const auto& h = histogram(k - 1);
      for (std::size_t s = 0; s < h.size(); ++s) acc[s] += h[s];
      acc[spacer] += off - child;
      return;
    }
  }
}

std::vector<std::uint64_t> Tower::range_histogram(int k, std::uint64_t begin,
                                                  std::uint64_t end) const {
  require(begin <= end, ErrorCode::invalid_argument, "range_histogram: begin > end");
  std::vector<std::uint64_t> hi(alphabet_.size(), 0), lo(alphabet_.size(), 0);
  add_prefix_histogram(k, end, hi);
  add_prefix_histogram(k, begin, lo);
  for (std::size_t s = 0; s < hi.size(); ++s) hi[s] -= lo[s];
  return hi;
}

// ---- streams -------------------------------------------------------------

SymbolStream::SymbolStream(std::shared_ptr<const Tower> tower, StreamOptions options)
    : tower_(std::move(tower)), buffer_(std::max<std::size_t>(options.chunk, 1)) {
  require(tower_->length() <= options.symbol_budget, ErrorCode::depth_over_budget,
          "l_J = " + std::to_string(tower_->length()) + " exceeds the symbol budget " +
              std::to_string(options.symbol_budget));
}

void SymbolStream::seek(std::uint64_t pos) {
  require(pos <= total_length(), ErrorCode::lag_out_of_range, "seek beyond end of stream");
  pos_ = pos;
}

std::span<const Symbol> SymbolStream::next() {
  const std::size_t n = read(buffer_);
  return {buffer_.data(), n};
}

std::size_t SymbolStream::read(std::span<Symbol> out) {
  const auto n = static_cast<std::size_t>(std::min<std::uint64_t>(out.size(), total_length() - pos_));
  tower_->extract(pos_, out.first(n));
  pos_ += n;
  return n;
}

// ---- words ---------------------------------------------------------------

SymbolWord base_word(const RealizedSchedule& realized, int base_stage) {
  const Tower tower(realized, base_stage, base_stage);
  SymbolWord w;
  w.stage = w.base = base_stage;
  w.alphabet = tower.alphabet();
  w.symbols.resize(w.alphabet.base_levels);
  for (std::size_t i = 0; i < w.symbols.size(); ++i) w.symbols[i] = static_cast<Symbol>(i);
  return w;
}

SymbolWord expand_once(const SymbolWord& word, std::int64_t cuts,
                       std::span<const std::int64_t> spacers) {
  require(cuts >= 2, ErrorCode::non_positive_cut, "r_j < 2");
  require(static_cast<std::int64_t>(spacers.size()) == cuts, ErrorCode::malformed_rule,
          "spacer vector length differs from r_j");
  SymbolWord out;
  out.stage = word.stage + 1;
  out.base = word.base;
  out.alphabet = word.alphabet;
  std::size_t total = word.size() * static_cast<std::size_t>(cuts);
  for (auto s : spacers) {
    require(s >= 0, ErrorCode::negative_spacer, "negative spacer");
    total += static_cast<std::size_t>(s);
  }
  out.symbols.reserve(total);
  for (auto s : spacers) {
    out.symbols.insert(out.symbols.end(), word.symbols.begin(), word.symbols.end());
    out.symbols.insert(out.symbols.end(), static_cast<std::size_t>(s), word.alphabet.spacer());
  }
  return out;
}

SymbolWord materialize(const RealizedSchedule& realized, int depth, int base_stage) {
  require(depth >= base_stage, ErrorCode::invalid_argument, "depth must be >= base stage");
  require(depth <= realized.depth(), ErrorCode::invalid_argument, "depth beyond realization");
  SymbolWord w = base_word(realized, base_stage);
  for (int k = base_stage; k < depth; ++k) {
    const auto& st = realized.stage(k);
    w = expand_once(w, st.cuts, st.spacers);
  }
  return w;
}

SymbolStream stream_word(const RealizedSchedule& realized, int depth, int base_stage,
                         StreamOptions options) {
  return SymbolStream(std::make_shared<const Tower>(realized, base_stage, depth), options);
}

Windows prefix_suffix(const RealizedSchedule& realized, int stage, int base_stage,
                      std::uint64_t length) {
  const Tower tower(realized, base_stage, stage);
  require(length <= tower.length(stage), ErrorCode::window_too_long,
          "window " + std::to_string(length) + " longer than l_" + std::to_string(stage) + " = " +
              std::to_string(tower.length(stage)));
  int first = base_stage;
  while (tower.length(first) < length) ++first;

  Windows w;
  const auto n = static_cast<std::size_t>(length);
  w.prefix.resize(n);
  w.suffix.resize(n);
  tower.extract(first, 0, w.prefix);
  tower.extract(first, tower.length(first) - length, w.suffix);
  // The prefix is stage-stable; the suffix only sees the last column's spacers.
  for (int k = first; k < stage; ++k) {
    const auto trailing = static_cast<std::size_t>(tower.stage(k).spacers.back());
    if (trailing >= n) {
      std::fill(w.suffix.begin(), w.suffix.end(), tower.alphabet().spacer());
    } else if (trailing > 0) {
      std::rotate(w.suffix.begin(), w.suffix.begin() + static_cast<std::ptrdiff_t>(trailing),
                  w.suffix.end());
      std::fill(w.suffix.end() - static_cast<std::ptrdiff_t>(trailing), w.suffix.end(),
                tower.alphabet().spacer());
    }
  }
  return w;
}

std::vector<double> LevelMeasures::masses() const {
  std::vector<double> out(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i) out[i] = mass(i);
  return out;
}

LevelMeasures level_measures(const Tower& tower) {
  return {tower.histogram(tower.depth()), tower.length()};
}

LevelMeasures level_measures(const RealizedSchedule& realized, int depth, int base_stage) {
  return level_measures(Tower(realized, base_stage, depth));
}

int default_base_stage(const RealizedSchedule& realized) {
  const auto hs = heights(realized);
  int fallback = 1;
  for (int j = 1; j <= hs.depth(); ++j) {
    const BigInt& l = hs.at(j);
    if (l >= 8 && l <= 64) return j;
    if (l <= 64) fallback = j;
  }
  return fallback;
}

void dump_word(SymbolStream& stream, std::ostream& out) {
  for (auto chunk = stream.next(); !chunk.empty(); chunk = stream.next())
    for (Symbol s : chunk) out << s << '\n';
}

}  // namespace rankone
