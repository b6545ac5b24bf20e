#include "aliasplan/oracle/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <numbers>
#include <random>

namespace aliasplan::oracle {

namespace {

using ld = long double;
constexpr ld kPi = std::numbers::pi_v<long double>;
constexpr ld kGate = 9.210340371976184L;
constexpr ld kSigmas = 3.0L;

struct Mat {
    std::size_t n = 0, m = 0;
    std::vector<ld> a;
    Mat(std::size_t rows, std::size_t cols) : n(rows), m(cols), a(rows * cols, 0.0L) {}
    ld& operator()(std::size_t r, std::size_t c) { return a[r * m + c]; }
    ld operator()(std::size_t r, std::size_t c) const { return a[r * m + c]; }
};

Mat mul(const Mat& x, const Mat& y) {
    Mat out(x.n, y.m);
    for (std::size_t r = 0; r < x.n; ++r)
        for (std::size_t c = 0; c < y.m; ++c) {
            ld s = 0.0L;
            for (std::size_t k = 0; k < x.m; ++k) s += x(r, k) * y(k, c);
            out(r, c) = s;
        }
    return out;
}

Mat transpose(const Mat& x) {
    Mat out(x.m, x.n);
    for (std::size_t r = 0; r < x.n; ++r)
        for (std::size_t c = 0; c < x.m; ++c) out(c, r) = x(r, c);
    return out;
}

// Lower Cholesky factor; zero pivots give zero columns (point masses).
Mat cholesky(const Mat& s) {
    Mat l(s.n, s.n);
    for (std::size_t j = 0; j < s.n; ++j) {
        ld d = s(j, j);
        for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
        if (d <= 0.0L) continue;
        l(j, j) = std::sqrt(d);
        for (std::size_t i = j + 1; i < s.n; ++i) {
            ld v = s(i, j);
            for (std::size_t k = 0; k < j; ++k) v -= l(i, k) * l(j, k);
            l(i, j) = v / l(j, j);
        }
    }
    return l;
}

// log N(r; 0, s)
ld log_density(const std::vector<ld>& r, const Mat& s) {
    const Mat l = cholesky(s);
    std::vector<ld> y(r.size());
    ld log_det = 0.0L;
    for (std::size_t i = 0; i < r.size(); ++i) {
        ld v = r[i];
        for (std::size_t k = 0; k < i; ++k) v -= l(i, k) * y[k];
        y[i] = v / l(i, i);
        log_det += 2.0L * std::log(l(i, i));
    }
    ld q = 0.0L;
    for (ld v : y) q += v * v;
    return -0.5L * q - 0.5L * log_det - 0.5L * static_cast<ld>(r.size()) * std::log(2.0L * kPi);
}

ld wrap(ld a) {
    a = std::fmod(a, 2.0L * kPi);
    if (a <= -kPi) a += 2.0L * kPi;
    if (a > kPi) a -= 2.0L * kPi;
    return a;
}

struct Gauss {
    ld x, y, th;
    Mat p{3, 3};
};

Gauss from(const PoseGaussian& g) {
    Gauss out{g.mean.x(), g.mean.y(), wrap(g.mean.z())};
    for (std::size_t r = 0; r < 3; ++r)
        for (std::size_t c = 0; c < 3; ++c)
            out.p(r, c) = g.covariance(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
    return out;
}

Gauss propagate(const World& w, const Gauss& g, ActionId u) {
    const auto& prim = w.motion.primitives.at(u);
    const ld c = std::cos(g.th), s = std::sin(g.th);
    Gauss out{g.x + c * prim.dx - s * prim.dy, g.y + s * prim.dx + c * prim.dy, wrap(g.th + prim.dtheta)};
    Mat f(3, 3);
    f(0, 0) = f(1, 1) = f(2, 2) = 1.0L;
    f(0, 2) = -s * prim.dx - c * prim.dy;
    f(1, 2) = c * prim.dx - s * prim.dy;
    out.p = mul(mul(f, g.p), transpose(f));
    for (std::size_t r = 0; r < 3; ++r)
        for (std::size_t k = 0; k < 3; ++k)
            out.p(r, k) += w.motion.process_noise(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k));
    for (std::size_t r = 0; r < 3; ++r)
        for (std::size_t k = r + 1; k < 3; ++k) out.p(r, k) = out.p(k, r) = 0.5L * (out.p(r, k) + out.p(k, r));
    return out;
}

std::pair<ld, ld> observe(ld x, ld y, ld th, const Landmark& l) {
    const ld dx = l.position.x() - x, dy = l.position.y() - y;
    const ld c = std::cos(th), s = std::sin(th);
    return {c * dx + s * dy, -s * dx + c * dy};
}

// Rows 2k, 2k+1 of the stacked Jacobian.
void jacobian_rows(const Gauss& g, const Landmark& l, Mat& h, std::size_t k) {
    const auto [hx, hy] = observe(g.x, g.y, g.th, l);
    const ld c = std::cos(g.th), s = std::sin(g.th);
    h(2 * k, 0) = -c;
    h(2 * k, 1) = -s;
    h(2 * k, 2) = hy;
    h(2 * k + 1, 0) = s;
    h(2 * k + 1, 1) = -c;
    h(2 * k + 1, 2) = -hx;
}

struct Region {
    ld cx, cy, radius, heading, half;
};

Region region_of(const Gauss& g) {
    const ld a = g.p(0, 0), b = g.p(0, 1), d = g.p(1, 1);
    const ld lmax = 0.5L * (a + d) + std::sqrt(0.25L * (a - d) * (a - d) + b * b);
    return {g.x, g.y, kSigmas * std::sqrt(std::max(0.0L, lmax)), g.th, kSigmas * std::sqrt(std::max(0.0L, g.p(2, 2)))};
}

bool visible(const ObservationModel& m, const Region& r, const Landmark& l) {
    const ld dx = l.position.x() - r.cx, dy = l.position.y() - r.cy;
    const ld dist = std::sqrt(dx * dx + dy * dy);
    if (dist > m.fov_range + r.radius) return false;
    if (m.fov_half_angle >= kPi || r.half >= kPi) return true;
    if (dist <= r.radius) return true;
    const ld off = std::abs(wrap(std::atan2(dy, dx) - r.heading));
    return off <= m.fov_half_angle + r.half + std::asin(r.radius / dist);
}

bool in_view(const ObservationModel& m, ld x, ld y, ld th, const Landmark& l) {
    const auto [hx, hy] = observe(x, y, th, l);
    if (std::sqrt(hx * hx + hy * hy) > m.fov_range) return false;
    if (m.fov_half_angle >= kPi) return true;
    return std::abs(std::atan2(hy, hx)) <= m.fov_half_angle;
}

Mat noise(const World& w) {
    Mat r(2, 2);
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t k = 0; k < 2; ++k)
            r(i, k) = w.observation.noise(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k));
    return r;
}

ld gate(const World& w, const Gauss& g, const Measurement& m, const Landmark& l) {
    Mat h(2, 3);
    jacobian_rows(g, l, h, 0);
    Mat s = mul(mul(h, g.p), transpose(h));
    const Mat r = noise(w);
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t k = 0; k < 2; ++k) s(i, k) += r(i, k);
    const auto [px, py] = observe(g.x, g.y, g.th, l);
    const ld rx = m.z.x() - px, ry = m.z.y() - py;
    const ld det = s(0, 0) * s(1, 1) - s(0, 1) * s(1, 0);
    return (s(1, 1) * rx * rx - (s(0, 1) + s(1, 0)) * rx * ry + s(0, 0) * ry * ry) / det;
}

ld falling(std::size_t m, std::size_t n) {
    if (n > m) return 0.0L;
    ld out = 1.0L;
    for (std::size_t k = 0; k < n; ++k) out *= static_cast<ld>(m - k);
    return out;
}

template <class Visible>
ld association_count(const World& w, const ObservationSet& z, Visible&& vis) {
    std::map<ClassId, std::size_t> need;
    for (const auto& m : z.measurements) ++need[m.cls];
    ld count = 1.0L;
    for (const auto& [cls, n] : need) {
        std::size_t have = 0;
        for (const auto& l : w.map.landmarks())
            if (l.cls == cls && vis(l)) ++have;
        count *= falling(have, n);
    }
    return count;
}

// Every injective, class-consistent assignment, lexicographic in landmark id.
std::vector<std::vector<LandmarkId>> all_assignments(const World& w, const ObservationSet& z) {
    std::vector<const Landmark*> sorted;
    for (const auto& l : w.map.landmarks()) sorted.push_back(&l);
    std::sort(sorted.begin(), sorted.end(), [](const Landmark* a, const Landmark* b) { return a->id < b->id; });
    std::vector<std::vector<LandmarkId>> out;
    std::vector<LandmarkId> cur(z.size());
    std::vector<bool> used(sorted.size(), false);
    auto rec = [&](auto&& self, std::size_t r) -> void {
        if (r == z.size()) {
            out.push_back(cur);
            return;
        }
        for (std::size_t k = 0; k < sorted.size(); ++k) {
            if (used[k] || sorted[k]->cls != z.measurements[r].cls) continue;
            used[k] = true;
            cur[r] = sorted[k]->id;
            self(self, r + 1);
            used[k] = false;
        }
    };
    rec(rec, 0);
    return out;
}

const Landmark& find(const World& w, LandmarkId id) {
    for (const auto& l : w.map.landmarks())
        if (l.id == id) return l;
    throw std::out_of_range("landmark");
}

ld zeta_of(const World& w, const Gauss& g, const Region& reg, const std::vector<LandmarkId>& beta,
           const ObservationSet& z) {
    if (z.size() == 0) return 1.0L;
    for (LandmarkId id : beta)
        if (!visible(w.observation, reg, find(w, id))) return 0.0L;
    const ld count = association_count(w, z, [&](const Landmark& l) { return visible(w.observation, reg, l); });
    if (count <= 0.0L) return 0.0L;
    const std::size_t n = z.size();
    Mat h(2 * n, 3);
    std::vector<ld> resid(2 * n);
    for (std::size_t k = 0; k < n; ++k) {
        const Landmark& l = find(w, beta[k]);
        jacobian_rows(g, l, h, k);
        const auto [px, py] = observe(g.x, g.y, g.th, l);
        resid[2 * k] = z.measurements[k].z.x() - px;
        resid[2 * k + 1] = z.measurements[k].z.y() - py;
    }
    Mat s = mul(mul(h, g.p), transpose(h));
    const Mat r = noise(w);
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t a = 0; a < 2; ++a)
            for (std::size_t b = 0; b < 2; ++b) s(2 * k + a, 2 * k + b) += r(a, b);
    return std::exp(log_density(resid, s)) / count;
}

}  // namespace

OracleReport compare(std::string quantity, long double reference, long double candidate) {
    OracleReport r;
    r.quantity = std::move(quantity);
    r.reference = reference;
    r.candidate = candidate;
    r.abs_error = std::abs(reference - candidate);
    const long double scale = std::max(std::abs(reference), std::abs(candidate));
    r.rel_error = scale > 0.0L ? r.abs_error / scale : 0.0L;
    return r;
}

void write_reports(std::ostream& out, std::span<const OracleReport> reports) {
    out << "quantity,reference,candidate,abs_error,rel_error\n" << std::setprecision(19);
    for (const auto& r : reports)
        out << r.quantity << ',' << r.reference << ',' << r.candidate << ',' << r.abs_error << ',' << r.rel_error
            << '\n';
}

long double brute_force_eta(const ZetaTable& zeta, std::span<const double> weights) {
    ld eta = 0.0L;
    for (std::size_t j = weights.size(); j-- > 0;)
        for (Eigen::Index i = zeta.values.rows(); i-- > 0;)
            eta += static_cast<ld>(zeta.values(i, static_cast<Eigen::Index>(j))) * static_cast<ld>(weights[j]);
    return eta;
}

ObjectiveOracle brute_force_objective(const World& world, const MixtureBelief& belief, ActionId u,
                                      std::span<const ObservationSet> samples) {
    ObjectiveOracle out;
    std::vector<Gauss> prop;
    std::vector<Region> regions;
    std::vector<ld> w;
    for (const auto& c : belief.components()) {
        prop.push_back(propagate(world, from(c.gaussian), u));
        regions.push_back(region_of(prop.back()));
        w.push_back(c.weight);
    }
    ld total = 0.0L;
    for (const auto& z : samples) {
        std::vector<std::vector<LandmarkId>> kept;
        for (const auto& beta : all_assignments(world, z)) {
            bool any = false;
            for (std::size_t j = 0; j < prop.size() && !any; ++j) {
                bool ok = true;
                for (std::size_t r = 0; r < beta.size() && ok; ++r) {
                    const Landmark& l = find(world, beta[r]);
                    ok = visible(world.observation, regions[j], l) && gate(world, prop[j], z.measurements[r], l) <= kGate;
                }
                any = ok;
            }
            if (any) kept.push_back(beta);
        }
        std::vector<ld> post;
        ld eta = 0.0L;
        for (std::size_t j = 0; j < prop.size(); ++j)
            for (const auto& beta : kept) {
                const ld v = zeta_of(world, prop[j], regions[j], beta, z) * w[j];
                post.push_back(v);
                eta += v;
            }
        ld h = 0.0L;
        for (auto& p : post) {
            p /= eta;
            if (p > 0.0L) h -= p * std::log(p);
        }
        total += h;
        out.posteriors.push_back(std::move(post));
    }
    out.objective = samples.empty() ? 0.0L : total / static_cast<ld>(samples.size());
    return out;
}

MonteCarloEstimate mc_zeta(const World& world, const PoseGaussian& component, const AssociationVector& beta,
                           const ObservationSet& z, std::size_t k, std::uint64_t seed) {
    const Gauss g = from(component);
    const Mat l = cholesky(g.p);
    const Mat r = noise(world);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    ld sum = 0.0L, sum_sq = 0.0L;
    for (std::size_t s = 0; s < k; ++s) {
        const ld e[3] = {normal(rng), normal(rng), normal(rng)};
        ld x[3] = {g.x, g.y, g.th};
        for (std::size_t i = 0; i < 3; ++i)
            for (std::size_t c = 0; c <= i; ++c) x[i] += l(i, c) * e[c];
        ld value = 0.0L;
        bool feasible = beta.ids.size() == z.size();
        for (std::size_t m = 0; m < beta.ids.size() && feasible; ++m)
            feasible = in_view(world.observation, x[0], x[1], x[2], find(world, beta.ids[m]));
        if (feasible) {
            const ld count = association_count(
                world, z, [&](const Landmark& lm) { return in_view(world.observation, x[0], x[1], x[2], lm); });
            ld log_p = 0.0L;
            for (std::size_t m = 0; m < z.size(); ++m) {
                const auto [px, py] = observe(x[0], x[1], x[2], find(world, beta.ids[m]));
                log_p += log_density({z.measurements[m].z.x() - px, z.measurements[m].z.y() - py}, r);
            }
            value = std::exp(log_p) / count;
        }
        sum += value;
        sum_sq += value * value;
    }
    MonteCarloEstimate est;
    est.samples = k;
    const ld n = static_cast<ld>(k);
    const ld mean = sum / n;
    const ld var = k > 1 ? std::max(0.0L, (sum_sq - n * mean * mean) / (n - 1.0L)) : 0.0L;
    est.estimate = static_cast<double>(mean);
    est.standard_error = static_cast<double>(std::sqrt(var / n));
    return est;
}

}  // namespace aliasplan::oracle
