#include "msmseg/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>

namespace msmseg {

std::size_t BinaryMask::count() const {
    std::size_t n = 0;
    for (std::uint8_t v : data) n += v ? 1 : 0;
    return n;
}

RegionMasks compose_regions(const LabelVolume& labels, const RegionRules& rules) {
    labels.validate();
    auto in = [](const std::vector<int>& set, int v) {
        return std::find(set.begin(), set.end(), v) != set.end();
    };
    RegionMasks r;
    r.et = BinaryMask::zeros(labels.T, labels.H, labels.W);
    r.tc = BinaryMask::zeros(labels.T, labels.H, labels.W);
    r.wt = BinaryMask::zeros(labels.T, labels.H, labels.W);
    for (std::size_t i = 0; i < labels.labels.size(); ++i) {
        const int v = labels.labels[i];
        if (v == kBackground) continue;
        const bool et = in(rules.et_labels, v);
        const bool tc = et || in(rules.tc_extra, v);
        const bool wt = tc || in(rules.wt_extra, v);
        r.et.data[i] = et ? 1 : 0;
        r.tc.data[i] = tc ? 1 : 0;
        r.wt.data[i] = wt ? 1 : 0;
    }
    return r;
}

double dice(const BinaryMask& pred, const BinaryMask& gt) {
    if (!pred.same_dims(gt)) throw ShapeError("dice: mask dims differ");
    std::size_t inter = 0, a = 0, b = 0;
    for (std::size_t i = 0; i < pred.data.size(); ++i) {
        const bool pa = pred.data[i] != 0, pb = gt.data[i] != 0;
        inter += (pa && pb) ? 1 : 0;
        a += pa ? 1 : 0;
        b += pb ? 1 : 0;
    }
    if (a + b == 0) return 1.0;
    return 2.0 * static_cast<double>(inter) / static_cast<double>(a + b);
}

std::vector<std::array<int, 3>> surface_voxels(const BinaryMask& mask, bool surface_2d) {
    std::vector<std::array<int, 3>> out;
    auto fg = [&](int t, int y, int x) {
        if (t < 0 || t >= mask.T || y < 0 || y >= mask.H || x < 0 || x >= mask.W) return false;
        return mask.at(t, y, x) != 0;
    };
    for (int t = 0; t < mask.T; ++t)
        for (int y = 0; y < mask.H; ++y)
            for (int x = 0; x < mask.W; ++x) {
                if (!fg(t, y, x)) continue;
                bool surf = !fg(t, y - 1, x) || !fg(t, y + 1, x) || !fg(t, y, x - 1) ||
                            !fg(t, y, x + 1);
                if (!surface_2d) surf = surf || !fg(t - 1, y, x) || !fg(t + 1, y, x);
                if (surf) out.push_back({t, y, x});
            }
    return out;
}

namespace {

void directed_distances(const std::vector<std::array<int, 3>>& from,
                        const std::vector<std::array<int, 3>>& to,
                        const std::array<double, 3>& sp, std::vector<double>& pool) {
    for (const auto& a : from) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& b : to) {
            const double dz = (a[0] - b[0]) * sp[0];
            const double dy = (a[1] - b[1]) * sp[1];
            const double dx = (a[2] - b[2]) * sp[2];
            best = std::min(best, dz * dz + dy * dy + dx * dx);
            if (best == 0.0) break;
        }
        pool.push_back(std::sqrt(best));
    }
}

double percentile_linear(std::vector<double>& v, double p) {
    std::sort(v.begin(), v.end());
    const double rank = p * static_cast<double>(v.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(std::floor(rank));
    const double frac = rank - static_cast<double>(lo);
    if (lo + 1 >= v.size()) return v.back();
    return v[lo] * (1.0 - frac) + v[lo + 1] * frac;
}

}  // namespace

double hd95(const BinaryMask& pred, const BinaryMask& gt, const Hd95Options& opt) {
    if (!pred.same_dims(gt)) throw ShapeError("hd95: mask dims differ");
    const bool pe = pred.count() == 0, ge = gt.count() == 0;
    if (pe && ge) return 0.0;
    if (pe != ge) {
        if (opt.empty_penalty >= 0.0) return opt.empty_penalty;
        const double dz = pred.T * opt.spacing[0];
        const double dy = pred.H * opt.spacing[1];
        const double dx = pred.W * opt.spacing[2];
        return std::sqrt(dz * dz + dy * dy + dx * dx);
    }
    auto sp = surface_voxels(pred, opt.surface_2d);
    auto sg = surface_voxels(gt, opt.surface_2d);
    std::vector<double> pool;
    pool.reserve(sp.size() + sg.size());
    directed_distances(sp, sg, opt.spacing, pool);
    directed_distances(sg, sp, opt.spacing, pool);
    return percentile_linear(pool, 0.95);
}

namespace {

// Regularized incomplete beta via the Lentz continued fraction.
double betacf(double a, double b, double x) {
    const int kMaxIter = 300;
    const double kEps = 3e-14, kFpMin = 1e-300;
    const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < kFpMin) d = kFpMin;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kFpMin) d = kFpMin;
        c = 1.0 + aa / c;
        if (std::abs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kFpMin) d = kFpMin;
        c = 1.0 + aa / c;
        if (std::abs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < kEps) break;
    }
    return h;
}

double ibeta(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double ln_beta = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b);
    const double front = std::exp(ln_beta + a * std::log(x) + b * std::log(1.0 - x));
    if (x < (a + 1.0) / (a + b + 2.0)) return front * betacf(a, b, x) / a;
    return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

}  // namespace

double paired_t_test_pvalue(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size() || a.size() < 2)
        throw ShapeError("paired t-test needs two equal-length samples with n >= 2");
    const std::size_t n = a.size();
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += a[i] - b[i];
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = a[i] - b[i] - mean;
        var += d * d;
    }
    var /= static_cast<double>(n - 1);
    if (var == 0.0) return mean == 0.0 ? 1.0 : 0.0;
    const double t = mean / std::sqrt(var / static_cast<double>(n));
    const double dof = static_cast<double>(n - 1);
    return ibeta(dof / 2.0, 0.5, dof / (dof + t * t));
}

void write_metrics_csv(const std::vector<MetricRow>& rows, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << "case,region,dice,hd95_mm\n";
    std::map<std::string, std::vector<std::array<double, 2>>> per_region;
    for (const MetricRow& r : rows) {
        out << r.case_name << "," << r.region << "," << r.dice << "," << r.hd95 << "\n";
        per_region[r.region].push_back({r.dice, r.hd95});
    }
    for (const auto& [region, vals] : per_region) {
        std::array<double, 2> mean{0, 0}, sd{0, 0};
        for (const auto& v : vals) {
            mean[0] += v[0];
            mean[1] += v[1];
        }
        mean[0] /= static_cast<double>(vals.size());
        mean[1] /= static_cast<double>(vals.size());
        for (const auto& v : vals) {
            sd[0] += (v[0] - mean[0]) * (v[0] - mean[0]);
            sd[1] += (v[1] - mean[1]) * (v[1] - mean[1]);
        }
        const double denom = vals.size() > 1 ? static_cast<double>(vals.size() - 1) : 1.0;
        out << "mean," << region << "," << mean[0] << "," << mean[1] << "\n";
        out << "std," << region << "," << std::sqrt(sd[0] / denom) << ","
            << std::sqrt(sd[1] / denom) << "\n";
    }
}

}  // namespace msmseg
