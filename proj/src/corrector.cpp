#include "abc2d/corrector.hpp"

#include <algorithm>
#include <cmath>

namespace abc2d {

double AveragingMask::operator()(const Vec2& x) const {
    const double y1 = x.x() / L;
    const double y2 = x.y() / L;
    if (std::abs(y1) >= 1.0 || std::abs(y2) >= 1.0) return 0.0;
    constexpr double c = (15.0 / 16.0) * (15.0 / 16.0);
    const double s1 = 1.0 - y1 * y1;
    const double s2 = 1.0 - y2 * y2;
    return c * s1 * s1 * s2 * s2 / (L * L);
}

Vec2 HomogenizedTensor::eigenvalues() const {
    Eigen::SelfAdjointEigenSolver<Mat2> es(symmetric());
    return es.eigenvalues();
}

GridField solve_corrector_component(std::shared_ptr<const FaceCoefficients> faces, int direction,
                                    const SolveOptions& options, SolveReport* report) {
    if (!faces) throw InvalidArgument("corrector solve needs face coefficients");
    if (direction != 0 && direction != 1) throw InvalidArgument("direction must be 0 or 1");
    const Grid g = faces->grid;
    const int n = g.intervals();
    const double inv_h = 1.0 / g.spacing();
    const std::size_t m = static_cast<std::size_t>(g.side());
    std::vector<double> b(g.node_count(), 0.0);
    for (int j = 1; j < n; ++j)
        for (int i = 1; i < n; ++i) {
            const std::size_t k = g.index(i, j);
            b[k] = direction == 0 ? (static_cast<double>(faces->east[k]) - faces->east[k - 1]) * inv_h
                                  : (static_cast<double>(faces->north[k]) - faces->north[k - m]) * inv_h;
        }
    SparseSystem system(g, std::move(faces), std::move(b), {});
    auto [phi, rep] = solve(system, options);
    if (report) *report = std::move(rep);
    return std::move(phi);
}

CorrectorSet solve_correctors(std::shared_ptr<const FaceCoefficients> faces, double L,
                              const SolveOptions& options) {
    if (!faces) throw InvalidArgument("corrector solve needs face coefficients");
    CorrectorSet set;
    set.L = L;
    set.grid = faces->grid;
    set.faces = faces;
    for (int d = 0; d < 2; ++d) {
        set.phi[d] = solve_corrector_component(faces, d, options, &set.phi_reports[d]);
        set.flux[d] = corrector_flux(*faces, set.phi[d], d);
    }
    return set;
}

CorrectorSet solve_correctors(const Medium& medium, double L, double h, const SolveOptions& options) {
    const Grid g(2.0 * L, h);
    auto faces = std::make_shared<const FaceCoefficients>(face_coefficients(medium, g));
    return solve_correctors(std::move(faces), L, options);
}

GridField solve_sigma_for_curl(GridField curl, const SolveOptions& options, SolveReport* report) {
    const Grid g = curl.grid;
    for (std::size_t k : g.boundary_nodes()) curl.values[k] = 0.0;
    SparseSystem system(g, nullptr, std::move(curl.values), {});
    auto [sigma, rep] = solve(system, options);
    if (report) *report = std::move(rep);
    return std::move(sigma);
}

GridField solve_sigma_for_flux(const FaceVectorField& flux, const SolveOptions& options, SolveReport* report) {
    return solve_sigma_for_curl(curl_rhs(flux), options, report);
}

void solve_sigma(CorrectorSet& c, const SolveOptions& options) {
    for (int d = 0; d < 2; ++d) c.sigma[d] = solve_sigma_for_flux(c.flux[d], options, &c.sigma_reports[d]);
    c.has_sigma = true;
}

HomogenizedTensor homogenized_tensor(const CorrectorSet& c, const AveragingMask& mask) {
    if (mask.L > 0.5 * c.grid.half_width() * (1.0 + 1e-12))
        throw InvalidArgument("averaging mask must be supported in Q_L");
    HomogenizedTensor t;
    for (int d = 0; d < 2; ++d) t.matrix.col(d) = masked_flux_average(StoredFlux{&c.flux[d]}, mask);
    return t;
}

// ---------------------------------------------------------------------------

std::vector<double> radius_ladder(double r_max) {
    if (!(r_max >= 1.0)) throw InvalidArgument("ladder needs r_max >= 1");
    std::vector<double> r;
    for (int k = 0;; ++k) {
        const double v = std::exp2(0.25 * k);
        if (v > r_max * (1.0 + 1e-12)) break;
        r.push_back(v);
    }
    if (r.back() < r_max * (1.0 - 1e-12)) r.push_back(r_max);
    return r;
}

SublinearityAccumulator::SublinearityAccumulator(const Grid& grid, std::vector<double> radii)
    : grid_(grid), radii_(std::move(radii)), sums_(radii_.size(), 0.0), counts_(radii_.size(), 0.0) {
    const int half = grid.intervals() / 2;
    bin_of_.assign(static_cast<std::size_t>(half) + 1, -1);
    for (int d = 0; d <= half; ++d) {
        const double rho = d * grid.spacing();
        for (std::size_t b = 0; b < radii_.size(); ++b)
            if (rho <= radii_[b] * (1.0 + 1e-12)) {
                bin_of_[static_cast<std::size_t>(d)] = static_cast<int>(b);
                break;
            }
    }
}

void SublinearityAccumulator::add(const GridField& field, double factor) {
    if (!(field.grid == grid_)) throw InvalidArgument("field on a different grid");
    const int n = grid_.intervals();
    const int c = n / 2;
    std::vector<double> bins(radii_.size(), 0.0);
    for (int j = 0; j <= n; ++j) {
        const int dj = std::abs(j - c);
        for (int i = 0; i <= n; ++i) {
            const int b = bin_of_[static_cast<std::size_t>(std::max(std::abs(i - c), dj))];
            if (b < 0) continue;
            const double v = field(i, j) * factor;
            bins[static_cast<std::size_t>(b)] += v * v;
            if (!counted_) counts_[static_cast<std::size_t>(b)] += 1.0;
        }
    }
    for (std::size_t b = 0; b < bins.size(); ++b) sums_[b] += bins[b];
    counted_ = true;
}

std::vector<double> SublinearityAccumulator::profile() const {
    std::vector<double> s(radii_.size(), 0.0);
    double sum = 0.0, count = 0.0;
    for (std::size_t b = 0; b < radii_.size(); ++b) {
        sum += sums_[b];
        count += counts_[b];
        s[b] = count > 0.0 ? std::sqrt(sum / count) / radii_[b] : 0.0;
    }
    return s;
}

RStarEstimate rstar_from_profile(const std::vector<double>& radii, const std::vector<double>& values,
                                 double beta) {
    if (!(beta > 0.0 && beta < 1.0)) throw InvalidArgument("beta must lie in (0, 1)");
    if (radii.empty() || radii.size() != values.size()) throw InvalidArgument("malformed profile");
    RStarEstimate est;
    est.beta = beta;
    for (std::size_t k = 0; k < radii.size(); ++k) est.profile.emplace_back(radii[k], values[k]);
    for (std::size_t k = 0; k < radii.size(); ++k) {
        bool ok = true;
        for (std::size_t m = k; m < radii.size() && ok; ++m)
            ok = values[m] <= std::pow(radii[k] / radii[m], beta);
        if (ok) {
            est.r_star = radii[k];
            return est;
        }
    }
    est.r_star = radii.back();
    est.saturated = true;
    return est;
}

RStarEstimate estimate_rstar(const CorrectorSet& c, double beta) {
    if (!c.has_sigma) throw InvalidArgument("r_star needs the flux correctors");
    SublinearityAccumulator acc(c.grid, radius_ladder(2.0 * c.L));
    for (int d = 0; d < 2; ++d) {
        acc.add(c.phi[d]);
        acc.add(c.sigma[d]);
    }
    return rstar_from_profile(acc.radii(), acc.profile(), beta);
}

} // namespace abc2d
