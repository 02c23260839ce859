#include "milvb/cooccur.hpp"

#include <cmath>
#include <deque>

namespace milvb {

void GrayVolume::validate() const {
    if (rows < 1 || cols < 1 || planes < 1) throw ValidationError("volume dimensions must be positive");
    if (n_levels < 1) throw ValidationError("n_levels must be >= 1");
    if (levels.size() != n_voxels()) throw ValidationError("volume size mismatch");
    for (const int g : levels)
        if (g < 0 || g >= n_levels) throw ValidationError("voxel level out of range");
}

const std::array<std::array<int, 3>, 13>& neighbor_directions_3d() {
    // First nonzero component positive; negatives give the other 13 offsets.
    static const std::array<std::array<int, 3>, 13> dirs = {{
        {1, 0, 0},  {0, 1, 0},  {0, 0, 1},   {1, 1, 0},  {1, -1, 0},
        {1, 0, 1},  {1, 0, -1}, {0, 1, 1},   {0, 1, -1}, {1, 1, 1},
        {1, 1, -1}, {1, -1, 1}, {1, -1, -1},
    }};
    return dirs;
}

std::vector<std::vector<std::int64_t>> glcm_counts(const GrayVolume& v) {
    v.validate();
    const auto n = static_cast<std::size_t>(v.n_levels);
    std::vector<std::vector<std::int64_t>> counts(n, std::vector<std::int64_t>(n, 0));
    for (int r = 0; r < v.rows; ++r)
        for (int c = 0; c < v.cols; ++c)
            for (int p = 0; p < v.planes; ++p)
                for (const auto& d : neighbor_directions_3d()) {
                    const int r2 = r + d[0], c2 = c + d[1], p2 = p + d[2];
                    if (!v.in_bounds(r2, c2, p2)) continue;
                    const int a = v.at(r, c, p), b = v.at(r2, c2, p2);
                    ++counts[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)];
                    ++counts[static_cast<std::size_t>(b)][static_cast<std::size_t>(a)];
                }
    return counts;
}

std::vector<std::vector<std::int64_t>> glrlm_counts(const GrayVolume& v) {
    v.validate();
    const int max_len = std::max(v.rows, std::max(v.cols, v.planes));
    std::vector<std::vector<std::int64_t>> counts(
        static_cast<std::size_t>(v.n_levels),
        std::vector<std::int64_t>(static_cast<std::size_t>(max_len), 0));
    for (const auto& d : neighbor_directions_3d()) {
        for (int r = 0; r < v.rows; ++r)
            for (int c = 0; c < v.cols; ++c)
                for (int p = 0; p < v.planes; ++p) {
                    // Line starts where the backwards step leaves the volume.
                    if (v.in_bounds(r - d[0], c - d[1], p - d[2])) continue;
                    int cr = r, cc = c, cp = p;
                    int run_level = v.at(cr, cc, cp);
                    int run_len = 1;
                    while (v.in_bounds(cr + d[0], cc + d[1], cp + d[2])) {
                        cr += d[0];
                        cc += d[1];
                        cp += d[2];
                        const int g = v.at(cr, cc, cp);
                        if (g == run_level) {
                            ++run_len;
                        } else {
                            ++counts[static_cast<std::size_t>(run_level)]
                                    [static_cast<std::size_t>(run_len - 1)];
                            run_level = g;
                            run_len = 1;
                        }
                    }
                    ++counts[static_cast<std::size_t>(run_level)]
                            [static_cast<std::size_t>(run_len - 1)];
                }
    }
    return counts;
}

std::vector<std::vector<std::int64_t>> glszm_counts(const GrayVolume& v) {
    v.validate();
    std::vector<std::vector<std::int64_t>> counts(static_cast<std::size_t>(v.n_levels));
    std::vector<char> visited(v.n_voxels(), 0);
    const auto index = [&](int r, int c, int p) {
        return static_cast<std::size_t>((r * v.cols + c) * v.planes + p);
    };
    for (int r = 0; r < v.rows; ++r)
        for (int c = 0; c < v.cols; ++c)
            for (int p = 0; p < v.planes; ++p) {
                if (visited[index(r, c, p)]) continue;
                const int level = v.at(r, c, p);
                std::int64_t size = 0;
                std::deque<std::array<int, 3>> queue = {{r, c, p}};
                visited[index(r, c, p)] = 1;
                while (!queue.empty()) {
                    const auto [cr, cc, cp] = queue.front();
                    queue.pop_front();
                    ++size;
                    for (int dr = -1; dr <= 1; ++dr)
                        for (int dc = -1; dc <= 1; ++dc)
                            for (int dp = -1; dp <= 1; ++dp) {
                                if (dr == 0 && dc == 0 && dp == 0) continue;
                                const int nr = cr + dr, nc = cc + dc, np = cp + dp;
                                if (!v.in_bounds(nr, nc, np) || visited[index(nr, nc, np)] ||
                                    v.at(nr, nc, np) != level)
                                    continue;
                                visited[index(nr, nc, np)] = 1;
                                queue.push_back({nr, nc, np});
                            }
                }
                auto& row = counts[static_cast<std::size_t>(level)];
                if (row.size() < static_cast<std::size_t>(size))
                    row.resize(static_cast<std::size_t>(size), 0);
                ++row[static_cast<std::size_t>(size - 1)];
            }
    std::size_t max_size = 1;
    for (const auto& row : counts) max_size = std::max(max_size, row.size());
    for (auto& row : counts) row.resize(max_size, 0);
    return counts;
}

NGTDMVectors ngtdm_vectors(const GrayVolume& v) {
    v.validate();
    NGTDMVectors out;
    out.s.assign(static_cast<std::size_t>(v.n_levels), 0.0);
    out.n.assign(static_cast<std::size_t>(v.n_levels), 0);
    for (int r = 0; r < v.rows; ++r)
        for (int c = 0; c < v.cols; ++c)
            for (int p = 0; p < v.planes; ++p) {
                double sum = 0.0;
                int count = 0;
                for (int dr = -1; dr <= 1; ++dr)
                    for (int dc = -1; dc <= 1; ++dc)
                        for (int dp = -1; dp <= 1; ++dp) {
                            if (dr == 0 && dc == 0 && dp == 0) continue;
                            if (!v.in_bounds(r + dr, c + dc, p + dp)) continue;
                            sum += static_cast<double>(v.at(r + dr, c + dc, p + dp));
                            ++count;
                        }
                if (count == 0) continue;  // 1x1x1 volume
                const int g = v.at(r, c, p);
                out.s[static_cast<std::size_t>(g)] +=
                    std::abs(static_cast<double>(g) - sum / static_cast<double>(count));
                ++out.n[static_cast<std::size_t>(g)];
            }
    return out;
}

namespace {

double xlogx(double x) { return x > 0.0 ? x * std::log(x) : 0.0; }

}  // namespace

std::vector<double> haralick_features(const std::vector<std::vector<std::int64_t>>& glcm) {
    const std::size_t n = glcm.size();
    double total = 0.0;
    for (const auto& row : glcm)
        for (const auto c : row) total += static_cast<double>(c);
    if (total <= 0.0) return std::vector<double>(13, 0.0);

    std::vector<std::vector<double>> p(n, std::vector<double>(n, 0.0));
    std::vector<double> px(n, 0.0), py(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            p[i][j] = static_cast<double>(glcm[i][j]) / total;
            px[i] += p[i][j];
            py[j] += p[i][j];
        }

    // 1-based gray values in all index-weighted sums.
    const auto gv = [](std::size_t i) { return static_cast<double>(i + 1); };

    double mu_x = 0.0, mu_y = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mu_x += gv(i) * px[i];
        mu_y += gv(i) * py[i];
    }
    double var_x = 0.0, var_y = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        var_x += (gv(i) - mu_x) * (gv(i) - mu_x) * px[i];
        var_y += (gv(i) - mu_y) * (gv(i) - mu_y) * py[i];
    }

    std::vector<double> p_sum(2 * n, 0.0);   // index k-2 holds i+j == k
    std::vector<double> p_diff(n, 0.0);      // index |i-j|
    double energy = 0.0, contrast = 0.0, idm = 0.0, entropy = 0.0, corr_acc = 0.0,
           variance = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            const double pij = p[i][j];
            const double diff = gv(i) - gv(j);
            energy += pij * pij;
            contrast += diff * diff * pij;
            idm += pij / (1.0 + diff * diff);
            entropy -= xlogx(pij);
            corr_acc += gv(i) * gv(j) * pij;
            variance += (gv(i) - mu_x) * (gv(i) - mu_x) * pij;
            p_sum[i + j] += pij;
            p_diff[static_cast<std::size_t>(std::llabs(static_cast<long long>(i) -
                                                       static_cast<long long>(j)))] += pij;
        }

    const double sigma = std::sqrt(var_x * var_y);
    const double correlation = sigma > 0.0 ? (corr_acc - mu_x * mu_y) / sigma : 0.0;

    double sum_avg = 0.0, sum_entropy = 0.0;
    for (std::size_t k = 0; k < p_sum.size(); ++k) {
        sum_avg += static_cast<double>(k + 2) * p_sum[k];
        sum_entropy -= xlogx(p_sum[k]);
    }
    double sum_var = 0.0;
    for (std::size_t k = 0; k < p_sum.size(); ++k) {
        const double d = static_cast<double>(k + 2) - sum_avg;
        sum_var += d * d * p_sum[k];
    }

    double diff_avg = 0.0, diff_entropy = 0.0;
    for (std::size_t k = 0; k < p_diff.size(); ++k) {
        diff_avg += static_cast<double>(k) * p_diff[k];
        diff_entropy -= xlogx(p_diff[k]);
    }
    double diff_var = 0.0;
    for (std::size_t k = 0; k < p_diff.size(); ++k) {
        const double d = static_cast<double>(k) - diff_avg;
        diff_var += d * d * p_diff[k];
    }

    double hx = 0.0, hy = 0.0, hxy1 = 0.0, hxy2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        hx -= xlogx(px[i]);
        hy -= xlogx(py[i]);
    }
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            const double marg = px[i] * py[j];
            if (marg > 0.0) {
                if (p[i][j] > 0.0) hxy1 -= p[i][j] * std::log(marg);
                hxy2 -= marg * std::log(marg);
            }
        }
    const double hmax = std::max(hx, hy);
    const double imc1 = hmax > 0.0 ? (entropy - hxy1) / hmax : 0.0;
    const double imc2 = std::sqrt(std::max(0.0, 1.0 - std::exp(-2.0 * (hxy2 - entropy))));

    return {energy,   contrast,  correlation, variance,  idm,      sum_avg, sum_var,
            sum_entropy, entropy, diff_var,    diff_entropy, imc1,  imc2};
}

namespace {

// Shared run/zone emphasis set; `counts[g][l-1]`, gray values 1-based.
std::vector<double> emphasis_features(const std::vector<std::vector<std::int64_t>>& counts,
                                      double rp_denominator) {
    double total = 0.0;
    for (const auto& row : counts)
        for (const auto c : row) total += static_cast<double>(c);
    if (total <= 0.0) return std::vector<double>(11, 0.0);

    double sre = 0, lre = 0, lgre = 0, hgre = 0, srlge = 0, srhge = 0, lrlge = 0, lrhge = 0;
    double gln = 0, rln = 0;
    std::vector<double> len_marginal;
    for (std::size_t g = 0; g < counts.size(); ++g) {
        double g_marginal = 0.0;
        const double gval = static_cast<double>(g + 1);
        for (std::size_t l = 0; l < counts[g].size(); ++l) {
            const double c = static_cast<double>(counts[g][l]);
            if (c == 0.0) continue;
            const double lval = static_cast<double>(l + 1);
            g_marginal += c;
            if (len_marginal.size() <= l) len_marginal.resize(l + 1, 0.0);
            len_marginal[l] += c;
            sre += c / (lval * lval);
            lre += c * lval * lval;
            lgre += c / (gval * gval);
            hgre += c * gval * gval;
            srlge += c / (gval * gval * lval * lval);
            srhge += c * gval * gval / (lval * lval);
            lrlge += c * lval * lval / (gval * gval);
            lrhge += c * gval * gval * lval * lval;
        }
        gln += g_marginal * g_marginal;
    }
    for (const double m : len_marginal) rln += m * m;

    return {sre / total,  lre / total,  gln / total,  rln / total,
            total / rp_denominator,     lgre / total, hgre / total,
            srlge / total, srhge / total, lrlge / total, lrhge / total};
}

}  // namespace

std::vector<double> glrlm_features(const std::vector<std::vector<std::int64_t>>& rlm,
                                   std::size_t n_voxels) {
    // Run percentage normalizes by the aggregate possible runs: one per voxel
    // per direction.
    return emphasis_features(rlm, static_cast<double>(n_voxels) * 13.0);
}

std::vector<double> glszm_features(const std::vector<std::vector<std::int64_t>>& szm,
                                   std::size_t n_voxels) {
    auto features = emphasis_features(szm, static_cast<double>(n_voxels));

    double total = 0.0, mean_size = 0.0;
    for (const auto& row : szm)
        for (std::size_t s = 0; s < row.size(); ++s) {
            total += static_cast<double>(row[s]);
            mean_size += static_cast<double>(row[s]) * static_cast<double>(s + 1);
        }
    double size_variance = 0.0;
    if (total > 0.0) {
        mean_size /= total;
        for (const auto& row : szm)
            for (std::size_t s = 0; s < row.size(); ++s) {
                const double d = static_cast<double>(s + 1) - mean_size;
                size_variance += d * d * static_cast<double>(row[s]) / total;
            }
    }
    features.push_back(size_variance);
    return features;
}

std::vector<double> ngtdm_features(const NGTDMVectors& vec) {
    const std::size_t n = vec.n.size();
    double n_total = 0.0;
    for (const auto c : vec.n) n_total += static_cast<double>(c);
    if (n_total <= 0.0) return std::vector<double>(5, 0.0);

    std::vector<double> prob(n, 0.0);
    std::vector<std::size_t> present;
    double s_total = 0.0, ps_total = 0.0;
    for (std::size_t g = 0; g < n; ++g) {
        prob[g] = static_cast<double>(vec.n[g]) / n_total;
        s_total += vec.s[g];
        ps_total += prob[g] * vec.s[g];
        if (vec.n[g] > 0) present.push_back(g);
    }
    const auto gv = [](std::size_t g) { return static_cast<double>(g + 1); };
    const double n_g = static_cast<double>(present.size());

    const double coarseness = ps_total > 0.0 ? 1.0 / ps_total : 0.0;

    double contrast = 0.0;
    if (present.size() > 1) {
        double pair_acc = 0.0;
        for (const auto i : present)
            for (const auto j : present)
                pair_acc += prob[i] * prob[j] * (gv(i) - gv(j)) * (gv(i) - gv(j));
        contrast = pair_acc / (n_g * (n_g - 1.0)) * (s_total / n_total);
    }

    double busy_denom = 0.0, complexity = 0.0, strength_num = 0.0;
    for (const auto i : present)
        for (const auto j : present) {
            if (i == j) continue;
            busy_denom += std::abs(gv(i) * prob[i] - gv(j) * prob[j]);
            complexity += std::abs(gv(i) - gv(j)) * (prob[i] * vec.s[i] + prob[j] * vec.s[j]) /
                          (n_total * (prob[i] + prob[j]));
            strength_num += (prob[i] + prob[j]) * (gv(i) - gv(j)) * (gv(i) - gv(j));
        }
    const double busyness = busy_denom > 0.0 ? ps_total / busy_denom : 0.0;
    const double strength = s_total > 0.0 ? strength_num / s_total : 0.0;

    return {coarseness, contrast, busyness, complexity, strength};
}

}  // namespace milvb
