#pragma once

// Exact lagged pair measures over a hierarchically defined word.
//
// W_{k+1} is r_k copies of W_k, copy i followed by a spacer run s_k(i). For a
// lag d, the pairs (x, x + d) of W_{k+1} fall into overlaps between a left
// piece and a right piece:
//   copy / copy      -> the pairs of W_k at the residual lag d' (or its
//                       transpose when d' < 0); d' = 0 is the diagonal
//   copy / spacer    -> a range histogram of W_k in the spacer column
//   spacer / copy    -> a range histogram of W_k in the spacer row
//   spacer / spacer  -> overlap length in the (spacer, spacer) cell
// Residual lags are discovered top-down, grouped with multiplicities, and
// evaluated bottom-up keeping only two levels alive. Residuals stay within
// two clusters (near d mod l_k and near -d mod l_k) whose width grows with
// the spacer sums, so structured lags touch few nodes per level.
//
// Geometry supplies the word structure and the two leaf computations:
//   using Length, Value;
//   int base() const; int depth() const; std::size_t alphabet() const;
//   std::size_t spacer_symbol() const;
//   Length length(int k) const;
//   std::size_t copies(int k) const;                     // r_k
//   Length copy_start(int k, std::size_t i) const;      // inside W_{k+1}
//   Length spacer(int k, std::size_t i) const;          // s_k(i)
//   void add_base_pairs(Length d, Value* m) const;      // W_{j0}, 0 < d
//   void add_histogram(int k, Length b, Length e, Value* acc) const;
//   void add_full_histogram(int k, Value* acc) const;

#include <algorithm>
#include <cstdint>
#include <map>
#include <vector>

namespace rankone::detail {

template <class Geometry>
class HierarchicalPairs {
 public:
  using Length = typename Geometry::Length;
  using Value = typename Geometry::Value;
  using Matrix = std::vector<Value>;

  explicit HierarchicalPairs(const Geometry& g) : g_(g), a_(g.alphabet()) {}

  /// Pair matrix of W_depth at lag 0 <= lag < l_depth.
  Matrix compute(Length lag) const {
    const int top = g_.depth();
    Matrix out(a_ * a_, Value{0});
    if (lag == 0) {
      add_diagonal(top, Value{1}, out);
      return out;
    }
    // recipes[k - base] describes the nodes of level k
    const int base = g_.base();
    std::vector<std::map<Length, Recipe>> recipes(static_cast<std::size_t>(top - base + 1));
    recipes.back()[lag];
    for (int k = top; k > base; --k) {
      auto& level = recipes[static_cast<std::size_t>(k - base)];
      auto& below = recipes[static_cast<std::size_t>(k - 1 - base)];
      for (auto& [d, recipe] : level) {
        expand(k, d, recipe);
        for (const auto& [child, mult] : recipe.children) {
          (void)mult;
          below[child < 0 ? -child : child];
        }
      }
    }

    std::map<Length, Matrix> prev;
    for (const auto& [d, recipe] : recipes.front()) {
      (void)recipe;
      Matrix m(a_ * a_, Value{0});
      g_.add_base_pairs(d, m.data());
      prev.emplace(d, std::move(m));
    }
    for (int k = base + 1; k <= top; ++k) {
      std::map<Length, Matrix> cur;
      for (const auto& [d, recipe] : recipes[static_cast<std::size_t>(k - base)]) {
        Matrix m(a_ * a_, Value{0});
        if (recipe.diagonal > 0) add_diagonal(k - 1, recipe.diagonal, m);
        for (const auto& [child, mult] : recipe.children) {
          const Matrix& c = prev.at(child < 0 ? -child : child);
          if (child > 0) {
            for (std::size_t i = 0; i < m.size(); ++i) m[i] += mult * c[i];
          } else {
            for (std::size_t a = 0; a < a_; ++a)
              for (std::size_t b = 0; b < a_; ++b) m[a * a_ + b] += mult * c[b * a_ + a];
          }
        }
        const std::size_t sp = g_.spacer_symbol();
        for (std::size_t s = 0; s < a_; ++s) {
          m[s * a_ + sp] += recipe.spacer_column[s];
          m[sp * a_ + s] += recipe.spacer_row[s];
        }
        m[sp * a_ + sp] += recipe.spacer_spacer;
        cur.emplace(d, std::move(m));
      }
      prev.swap(cur);
    }
    return prev.at(lag);
  }

 private:
  struct Recipe {
    // signed residual lag -> multiplicity; negative means transposed
    std::map<Length, Value> children;
    Value diagonal{0};
    std::vector<Value> spacer_column;  // pairs (a, spacer)
    std::vector<Value> spacer_row;     // pairs (spacer, b)
    Value spacer_spacer{0};
  };

  struct Piece {
    Length begin;
    Length end;
    bool spacer;
  };

  void add_diagonal(int k, Value mult, Matrix& m) const {
    std::vector<Value> h(a_, Value{0});
    g_.add_full_histogram(k, h.data());
    for (std::size_t s = 0; s < a_; ++s) m[s * a_ + s] += mult * h[s];
  }

  // Decompose node (k, d) into level k-1 terms.
  void expand(int k, Length d, Recipe& recipe) const {
    const int child = k - 1;
    const Length len = g_.length(child);
    const std::size_t r = g_.copies(child);
    std::vector<Piece> pieces;
    pieces.reserve(2 * r);
    for (std::size_t i = 0; i < r; ++i) {
      const Length s = g_.copy_start(child, i);
      pieces.push_back({s, s + len, false});
      const Length sp = g_.spacer(child, i);
      if (sp > 0) pieces.push_back({s + len, s + len + sp, true});
    }
    recipe.spacer_column.assign(a_, Value{0});
    recipe.spacer_row.assign(a_, Value{0});
    // identical histogram ranges recur across columns
    std::map<std::pair<Length, Length>, Value> column_ranges, row_ranges;

    std::size_t first = 0;
    for (const Piece& x : pieces) {
      const Length lo_target = x.begin + d;
      const Length hi_target = x.end + d;
      while (first < pieces.size() && pieces[first].end <= lo_target) ++first;
      for (std::size_t j = first; j < pieces.size() && pieces[j].begin < hi_target; ++j) {
        const Piece& y = pieces[j];
        const Length lo = std::max(x.begin, y.begin - d);
        const Length hi = std::min(x.end, y.end - d);
        if (lo >= hi) continue;
        if (!x.spacer && !y.spacer) {
          const Length residual = d - (y.begin - x.begin);
          if (residual == 0)
            recipe.diagonal += Value{1};
          else
            recipe.children[residual] += Value{1};
        } else if (!x.spacer) {
          column_ranges[{lo - x.begin, hi - x.begin}] += Value{1};
        } else if (!y.spacer) {
          row_ranges[{lo + d - y.begin, hi + d - y.begin}] += Value{1};
        } else {
          recipe.spacer_spacer += static_cast<Value>(hi - lo);
        }
      }
    }
    std::vector<Value> h(a_);
    for (const auto& [range, mult] : column_ranges) {
      std::fill(h.begin(), h.end(), Value{0});
      g_.add_histogram(child, range.first, range.second, h.data());
      for (std::size_t s = 0; s < a_; ++s) recipe.spacer_column[s] += mult * h[s];
    }
    for (const auto& [range, mult] : row_ranges) {
      std::fill(h.begin(), h.end(), Value{0});
      g_.add_histogram(child, range.first, range.second, h.data());
      for (std::size_t s = 0; s < a_; ++s) recipe.spacer_row[s] += mult * h[s];
    }
  }

  const Geometry& g_;
  std::size_t a_;
};

}  // namespace rankone::detail
