#include "labeldense/matching.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "binio.hpp"

namespace labeldense {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Square min-cost assignment (Kuhn-Munkres with potentials, O(n^3)).
// p[j] = row matched to column j, 1-based with 0 as the virtual column.
// On return u,v are feasible duals: u[i]+v[j] <= cost(i-1,j-1), tight on
// matched edges.
void lap_square(const Mat& cost, std::vector<int>& p, std::vector<double>& u,
                std::vector<double>& v) {
    const int n = static_cast<int>(cost.rows);
    u.assign(n + 1, 0.0);
    v.assign(n + 1, 0.0);
    p.assign(n + 1, 0);
    std::vector<int> way(n + 1, 0);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<double> minv(n + 1, kInf);
        std::vector<char> used(n + 1, 0);
        do {
            used[j0] = 1;
            const int i0 = p[j0];
            int j1 = 0;
            double delta = kInf;
            for (int j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const int j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0);
    }
}

// Kuhn augmenting path on the tight-edge graph; rows are candidates for
// column `col`.
bool kuhn_try(int col, const std::vector<std::vector<int>>& tight_rows,
              std::vector<char>& seen, std::vector<int>& col_of_row,
              const std::vector<char>& row_taken) {
    for (int row : tight_rows[col]) {
        if (row_taken[row] || seen[row]) continue;
        seen[row] = 1;
        if (col_of_row[row] == -1 ||
            kuhn_try(col_of_row[row], tight_rows, seen, col_of_row, row_taken)) {
            col_of_row[row] = col;
            return true;
        }
    }
    return false;
}

// True when every column in cols can be matched to a distinct free row
// through tight edges.
bool perfect_matching_exists(const std::vector<int>& cols,
                             const std::vector<std::vector<int>>& tight_rows, int n,
                             const std::vector<char>& row_taken) {
    std::vector<int> col_of_row(n, -1);
    for (int col : cols) {
        std::vector<char> seen(n, 0);
        if (!kuhn_try(col, tight_rows, seen, col_of_row, row_taken)) return false;
    }
    return true;
}

}  // namespace

int AssignmentMap::matched_count() const {
    int n = 0;
    for (int c : class_of_primitive)
        if (c >= 0) ++n;
    return n;
}

std::pair<Mat, std::vector<uint8_t>> primitive_scene_features(const Mat& f,
                                                              const AffinityMatrix& aff,
                                                              int k) {
    if (aff.size() != f.rows) throw Error("affinity length does not match feature rows");
    Mat fbar(static_cast<std::size_t>(k), f.cols, 0.0);
    std::vector<int> counts(k, 0);
    for (std::size_t m = 0; m < f.rows; ++m) {
        const int prim = aff[m];
        ++counts[prim];
        const double* fm = f.row(m);
        double* out = fbar.row(prim);
        for (std::size_t j = 0; j < f.cols; ++j) out[j] += fm[j];
    }
    std::vector<uint8_t> present(k, 0);
    for (int p = 0; p < k; ++p) {
        if (counts[p] == 0) continue;
        present[p] = 1;
        double* out = fbar.row(p);
        for (std::size_t j = 0; j < f.cols; ++j) out[j] /= counts[p];
    }
    return {std::move(fbar), std::move(present)};
}

CostMatrix build_cost_matrix(const Mat& prim_features, const std::vector<uint8_t>& present,
                             const Classifier& clf, const SceneLabels& y) {
    CostMatrix cm;
    cm.num_primitives = static_cast<int>(prim_features.rows);
    for (int p = 0; p < cm.num_primitives; ++p)
        if (present[p]) cm.row_ids.push_back(p);
    for (int c = 0; c < y.num_classes(); ++c)
        if (y.present[c]) cm.col_ids.push_back(c);
    if (cm.row_ids.empty()) throw DataError("no present primitive in scene");
    if (cm.col_ids.empty()) throw DataError("scene has no present class");

    cm.scores = Mat(cm.row_ids.size(), cm.col_ids.size());
    for (std::size_t i = 0; i < cm.row_ids.size(); ++i) {
        const double* fp = prim_features.row(cm.row_ids[i]);
        for (std::size_t j = 0; j < cm.col_ids.size(); ++j) {
            const int c = cm.col_ids[j];
            double dot = 0.0;
            for (std::size_t h = 0; h < prim_features.cols; ++h) dot += fp[h] * clf.w(h, c);
            cm.scores(i, j) = dot;
        }
    }
    return cm;
}

AssignmentMap hungarian_match(const CostMatrix& costs) {
    const int kp = static_cast<int>(costs.scores.rows);
    const int cp = static_cast<int>(costs.scores.cols);
    if (kp < cp)
        throw UnmatchableScene("scene has " + std::to_string(kp) + " primitives for " +
                               std::to_string(cp) + " classes");

    // Maximization → shifted minimization. Real classes occupy the first cp
    // columns; the remaining columns are zero-cost dummies so every class
    // gets exactly one primitive and surplus primitives land on a dummy.
    double max_score = -kInf;
    for (double s : costs.scores.d) max_score = std::max(max_score, s);
    const int n = kp;
    Mat cost(n, n, 0.0);
    for (int i = 0; i < kp; ++i)
        for (int j = 0; j < cp; ++j) cost(i, j) = max_score - costs.scores(i, j);

    std::vector<int> p;
    std::vector<double> u, v;
    lap_square(cost, p, u, v);

    // Tight edges certify optimality; refine inside them so equal-score
    // optima resolve to the lexicographically smallest assignment.
    double scale = 1.0;
    for (double c : cost.d) scale = std::max(scale, std::abs(c));
    const double tol = 1e-9 * scale;
    std::vector<std::vector<int>> tight_rows(n);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i)
            if (cost(i, j) - u[i + 1] - v[j + 1] <= tol) tight_rows[j].push_back(i);

    std::vector<char> row_taken(n, 0);
    std::vector<int> row_of_col(cp, -1);
    for (int j = 0; j < cp; ++j) {
        std::vector<int> rest;
        for (int jj = j + 1; jj < n; ++jj) rest.push_back(jj);
        bool placed = false;
        for (int i : tight_rows[j]) {
            if (row_taken[i]) continue;
            row_taken[i] = 1;
            if (perfect_matching_exists(rest, tight_rows, n, row_taken)) {
                row_of_col[j] = i;
                placed = true;
                break;
            }
            row_taken[i] = 0;
        }
        if (!placed) {
            // Tolerance starves the tight graph only in pathological inputs;
            // fall back to the solver's own matching for the rest.
            for (int jj = j; jj < cp; ++jj)
                if (row_of_col[jj] == -1) {
                    row_of_col[jj] = p[jj + 1] - 1;
                    row_taken[p[jj + 1] - 1] = 1;
                }
            break;
        }
    }

    AssignmentMap am;
    am.class_of_primitive.assign(costs.num_primitives, -1);
    for (int j = 0; j < cp; ++j) {
        const int i = row_of_col[j];
        am.class_of_primitive[costs.row_ids[i]] = costs.col_ids[j];
        am.total_score += costs.scores(i, j);
    }
    return am;
}

AssignmentMap naive_match(const CostMatrix& costs) {
    const int kp = static_cast<int>(costs.scores.rows);
    const int cp = static_cast<int>(costs.scores.cols);
    if (kp < cp)
        throw UnmatchableScene("scene has " + std::to_string(kp) + " primitives for " +
                               std::to_string(cp) + " classes");

    // Per-class argmax primitive, lowest row on ties.
    std::vector<int> pick(cp, 0);
    for (int j = 0; j < cp; ++j) {
        double best = -kInf;
        for (int i = 0; i < kp; ++i) {
            if (costs.scores(i, j) > best) {
                best = costs.scores(i, j);
                pick[j] = i;
            }
        }
    }
    // A contested primitive keeps its best class; losers stay unmatched.
    std::vector<int> winner(kp, -1);
    for (int j = 0; j < cp; ++j) {
        const int i = pick[j];
        if (winner[i] == -1 || costs.scores(i, j) > costs.scores(i, winner[i]))
            winner[i] = j;
    }
    AssignmentMap am;
    am.class_of_primitive.assign(costs.num_primitives, -1);
    for (int i = 0; i < kp; ++i) {
        if (winner[i] == -1) continue;
        am.class_of_primitive[costs.row_ids[i]] = costs.col_ids[winner[i]];
        am.total_score += costs.scores(i, winner[i]);
    }
    return am;
}

AssignmentMap filter_assignments(const AssignmentMap& pi, const PrimitiveSet& prims,
                                 int group_k, uint64_t seed) {
    const int k = prims.count();
    if (group_k <= 0 || group_k >= k)
        throw ConfigError("filter group count must be in (0, K)");

    const KmeansResult groups = kmeans(prims.centroids, group_k, seed);
    AssignmentMap out = pi;
    for (int g = 0; g < group_k; ++g) {
        int single_class = -1;
        bool conflict = false;
        for (int p = 0; p < k; ++p) {
            if (groups.labels[p] != g) continue;
            const int c = pi.class_of_primitive[p];
            if (c < 0) continue;
            if (single_class == -1) {
                single_class = c;
            } else if (single_class != c) {
                conflict = true;
                break;
            }
        }
        if (single_class == -1) continue;  // nothing matched in this group
        for (int p = 0; p < k; ++p)
            if (groups.labels[p] == g)
                out.class_of_primitive[p] = conflict ? -1 : single_class;
    }
    return out;
}

std::vector<int32_t> densify_labels(const AssignmentMap& pi, const AffinityMatrix& aff) {
    std::vector<int32_t> labels(aff.size(), kIgnoreLabel);
    for (std::size_t m = 0; m < aff.size(); ++m) {
        const int c = pi.class_of_primitive[aff[m]];
        labels[m] = c < 0 ? kIgnoreLabel : c;
    }
    return labels;
}

void write_pseudo_labels(const std::string& path, const std::vector<int32_t>& labels) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw DataError("cannot open " + path + " for writing");
    os.write("WPL1", 4);
    binio::put_u32(os, static_cast<uint32_t>(labels.size()));
    for (int32_t v : labels) binio::put_i32(os, v);
    if (!os) throw DataError("write failed for " + path);
}

std::vector<int32_t> read_pseudo_labels(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("cannot open " + path);
    binio::check_magic(is, "WPL1", path);
    const uint32_t m = binio::get_u32(is, path);
    if (m == 0) throw DataError("empty label dump in " + path);
    std::vector<int32_t> labels(m);
    for (uint32_t i = 0; i < m; ++i) labels[i] = binio::get_i32(is, path);
    return labels;
}

}  // namespace labeldense
