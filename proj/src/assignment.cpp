#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "clab/errors.hpp"
#include "clab/ot.hpp"

namespace clab {

bool is_valid_permutation(const std::vector<int>& perm, int n) {
    if (static_cast<int>(perm.size()) != n) return false;
    std::vector<char> seen(static_cast<std::size_t>(n), 0);
    for (int j : perm) {
        if (j < 0 || j >= n || seen[static_cast<std::size_t>(j)]) return false;
        seen[static_cast<std::size_t>(j)] = 1;
    }
    return true;
}

double solve_assignment(const Mat& cost, std::vector<int>& perm) {
    require(cost.rows() == cost.cols() && cost.rows() >= 1, "assignment needs a square cost");
    require(cost.allFinite(), "assignment costs must be finite");
    const int n = static_cast<int>(cost.rows());
    const double inf = std::numeric_limits<double>::infinity();

    // shortest augmenting paths with dual potentials (1-indexed; column 0 is
    // the virtual start). p[j] = row matched to column j.
    auto sz = [](int k) { return static_cast<std::size_t>(k); };
    std::vector<double> u(sz(n + 1), 0.0), v(sz(n + 1), 0.0), minv(sz(n + 1));
    std::vector<int> p(sz(n + 1), 0), way(sz(n + 1), 0);
    std::vector<char> used(sz(n + 1));
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::fill(minv.begin(), minv.end(), inf);
        std::fill(used.begin(), used.end(), 0);
        do {
            used[sz(j0)] = 1;
            int i0 = p[sz(j0)], j1 = -1;
            double delta = inf;
            for (int j = 1; j <= n; ++j) {
                if (used[sz(j)]) continue;
                double cur = cost(i0 - 1, j - 1) - u[sz(i0)] - v[sz(j)];
                if (cur < minv[sz(j)]) {
                    minv[sz(j)] = cur;
                    way[sz(j)] = j0;
                }
                if (minv[sz(j)] < delta) {
                    delta = minv[sz(j)];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[sz(j)]) {
                    u[sz(p[sz(j)])] += delta;
                    v[sz(j)] -= delta;
                } else {
                    minv[sz(j)] -= delta;
                }
            }
            j0 = j1;
        } while (p[sz(j0)] != 0);
        do {
            int j1 = way[sz(j0)];
            p[sz(j0)] = p[sz(j1)];
            j0 = j1;
        } while (j0 != 0);
    }
    perm.assign(sz(n), -1);
    for (int j = 1; j <= n; ++j) perm[sz(p[sz(j)] - 1)] = j - 1;
    double total = 0.0;
    for (int i = 0; i < n; ++i) total += cost(i, perm[sz(i)]);
    return total;
}

namespace {

// Kuhn's augmenting-path matching over edges with cost <= threshold.
struct ThresholdMatcher {
    const Mat& cost;
    int n;
    std::vector<int> match_row, match_col;  // row -> col, col -> row
    std::vector<char> visited;

    explicit ThresholdMatcher(const Mat& c)
        : cost(c),
          n(static_cast<int>(c.rows())),
          match_row(static_cast<std::size_t>(n)),
          match_col(static_cast<std::size_t>(n)),
          visited(static_cast<std::size_t>(n)) {}

    bool try_augment(int i, double thr) {
        for (int j = 0; j < n; ++j) {
            if (visited[static_cast<std::size_t>(j)] || cost(i, j) > thr) continue;
            visited[static_cast<std::size_t>(j)] = 1;
            int owner = match_col[static_cast<std::size_t>(j)];
            if (owner < 0 || try_augment(owner, thr)) {
                match_row[static_cast<std::size_t>(i)] = j;
                match_col[static_cast<std::size_t>(j)] = i;
                return true;
            }
        }
        return false;
    }

    bool perfect(double thr) {
        std::fill(match_row.begin(), match_row.end(), -1);
        std::fill(match_col.begin(), match_col.end(), -1);
        for (int i = 0; i < n; ++i) {
            std::fill(visited.begin(), visited.end(), 0);
            if (!try_augment(i, thr)) return false;
        }
        return true;
    }
};

}  // namespace

double solve_bottleneck(const Mat& cost, std::vector<int>& perm) {
    require(cost.rows() == cost.cols() && cost.rows() >= 1, "assignment needs a square cost");
    require(cost.allFinite(), "assignment costs must be finite");
    const int n = static_cast<int>(cost.rows());
    std::vector<double> levels(cost.data(), cost.data() + n * n);
    std::sort(levels.begin(), levels.end());
    levels.erase(std::unique(levels.begin(), levels.end()), levels.end());

    ThresholdMatcher matcher(cost);
    std::size_t lo = 0, hi = levels.size() - 1;
    // the full matrix always admits a perfect matching, so levels[hi] works
    while (lo < hi) {
        std::size_t mid = lo + (hi - lo) / 2;
        if (matcher.perfect(levels[mid]))
            hi = mid;
        else
            lo = mid + 1;
    }
    matcher.perfect(levels[lo]);
    perm.assign(matcher.match_row.begin(), matcher.match_row.end());
    return levels[lo];
}

}  // namespace clab
