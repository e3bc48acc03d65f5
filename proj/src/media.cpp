#include "abc2d/media.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace abc2d {

namespace {

constexpr double kHuge = std::numeric_limits<double>::max() / 4;

Box whole_plane() { return {-kHuge, kHuge, -kHuge, kHuge}; }

std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::int64_t floor_cell(double x, double cell_size) {
    return static_cast<std::int64_t>(std::floor(x / cell_size));
}

} // namespace

ConstantMedium::ConstantMedium(double value) : value_(value) {
    if (!(value > 0.0)) throw InvalidArgument("constant medium requires a positive value");
}

Box ConstantMedium::safe_region() const { return whole_plane(); }

LaminateMedium::LaminateMedium(double alpha, double beta, double band_width)
    : alpha_(alpha), beta_(beta), band_width_(band_width) {
    if (!(alpha > 0.0 && beta > 0.0 && band_width > 0.0))
        throw InvalidArgument("laminate requires positive phases and band width");
}

double LaminateMedium::eval(const Vec2& x) const {
    const auto band = static_cast<std::int64_t>(std::floor(x.x() / band_width_));
    return (band % 2 == 0) ? alpha_ : beta_;
}

Box LaminateMedium::safe_region() const { return whole_plane(); }
double LaminateMedium::lower_bound() const { return std::min(alpha_, beta_); }
double LaminateMedium::upper_bound() const { return std::max(alpha_, beta_); }

FunctionMedium::FunctionMedium(std::function<double(const Vec2&)> fn, double lower, double upper)
    : fn_(std::move(fn)), lower_(lower), upper_(upper) {}

Box FunctionMedium::safe_region() const { return whole_plane(); }

// ---------------------------------------------------------------------------

CellStream::CellStream(std::uint64_t seed, std::int64_t i, std::int64_t j) {
    std::uint64_t h = splitmix64(seed);
    h = splitmix64(h ^ static_cast<std::uint64_t>(i));
    h = splitmix64(h ^ (static_cast<std::uint64_t>(j) * 0xD1B54A32D192ED03ULL));
    key_ = h;
}

std::uint64_t CellStream::next_u64() {
    return splitmix64(key_ + 0x632BE59BD9B4E019ULL * ++counter_);
}

double CellStream::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::vector<Vec2> generate_cell(const PointProcessConfig& config, CellIndex cell) {
    CellStream stream(config.master_seed, cell.i, cell.j);
    const double cs = config.cell_size;
    const double mean = config.intensity * cs * cs;

    // Poisson count by CDF inversion.
    const double u = stream.uniform();
    int count = 0;
    double p = std::exp(-mean);
    double cdf = p;
    while (u > cdf && count < 1000) {
        ++count;
        p *= mean / count;
        cdf += p;
    }

    std::vector<Vec2> pts;
    pts.reserve(static_cast<std::size_t>(count));
    const double x0 = static_cast<double>(cell.i) * cs;
    const double y0 = static_cast<double>(cell.j) * cs;
    for (int k = 0; k < count; ++k) {
        double x = x0 + stream.uniform() * cs;
        double y = y0 + stream.uniform() * cs;
        // Guard against rounding up to the next cell edge.
        if (x >= x0 + cs) x = std::nextafter(x0 + cs, x0);
        if (y >= y0 + cs) y = std::nextafter(y0 + cs, y0);
        pts.emplace_back(x, y);
    }
    return pts;
}

// ---------------------------------------------------------------------------

PointSet::PointSet(std::int64_t i0, std::int64_t j0, std::int64_t ni, std::int64_t nj,
                   double cell_size)
    : i0_(i0), j0_(j0), ni_(ni), nj_(nj), cell_size_(cell_size) {
    if (ni <= 0 || nj <= 0) throw InvalidArgument("point set needs at least one cell");
    offsets_.reserve(static_cast<std::size_t>(ni * nj) + 1);
}

std::span<const Vec2> PointSet::cell(CellIndex c) const {
    if (!has_cell(c)) throw InsufficientSampling("cell outside sampled block");
    const auto k = flat(c);
    return {points_.data() + offsets_[k], offsets_[k + 1] - offsets_[k]};
}

Box PointSet::coverage() const {
    return {static_cast<double>(i0_) * cell_size_, static_cast<double>(i0_ + ni_) * cell_size_,
            static_cast<double>(j0_) * cell_size_, static_cast<double>(j0_ + nj_) * cell_size_};
}

void PointSet::push_cell(std::span<const Vec2> pts) {
    if (complete()) throw Error("point set already complete");
    points_.insert(points_.end(), pts.begin(), pts.end());
    offsets_.push_back(points_.size());
}

bool PointSet::operator==(const PointSet& other) const {
    if (i0_ != other.i0_ || j0_ != other.j0_ || ni_ != other.ni_ || nj_ != other.nj_ ||
        cell_size_ != other.cell_size_ || offsets_ != other.offsets_ ||
        points_.size() != other.points_.size())
        return false;
    for (std::size_t k = 0; k < points_.size(); ++k)
        if (points_[k].x() != other.points_[k].x() || points_[k].y() != other.points_[k].y())
            return false;
    return true;
}

PointSet sample_points(const PointProcessConfig& config, const Box& region) {
    if (!(region.area() > 0.0)) throw InvalidArgument("sampling region must have positive area");
    const double cs = config.cell_size;
    const std::int64_t i0 = floor_cell(region.xmin, cs);
    const std::int64_t j0 = floor_cell(region.ymin, cs);
    // Cells intersecting the box; a box edge on a cell boundary does not pull
    // in the next cell.
    const std::int64_t i1 = static_cast<std::int64_t>(std::ceil(region.xmax / cs));
    const std::int64_t j1 = static_cast<std::int64_t>(std::ceil(region.ymax / cs));
    PointSet set(i0, j0, i1 - i0, j1 - j0, cs);
    for (std::int64_t j = j0; j < j1; ++j)
        for (std::int64_t i = i0; i < i1; ++i) {
            const auto pts = generate_cell(config, {i, j});
            set.push_cell(pts);
        }
    return set;
}

double bump(const Vec2& y) {
    const double s = 1.0 - 4.0 * y.squaredNorm();
    if (s <= 0.0) return 0.0;
    return std::exp(-1.0 / s);
}

// ---------------------------------------------------------------------------

PoissonMedium::PoissonMedium(PointProcessConfig config, PointSet points)
    : config_(config), points_(std::move(points)) {
    if (!points_.complete()) throw InvalidArgument("incomplete point set");
}

PoissonMedium PoissonMedium::sample(const PointProcessConfig& config, const Box& region) {
    return PoissonMedium(config, sample_points(config, region));
}

Box PoissonMedium::safe_region() const { return points_.coverage().shrunk(kSupportRadius); }

double PoissonMedium::upper_bound() const { return kFloor + std::exp(-1.0); }

double PoissonMedium::eval(const Vec2& x) const {
    const Box safe = safe_region();
    if (!safe.contains(x))
        throw InsufficientSampling("coefficient queried at (" + std::to_string(x.x()) + ", " +
                                   std::to_string(x.y()) + ") outside the sampled region");
    const double cs = points_.cell_size();
    const std::int64_t ia = std::max(floor_cell(x.x() - kSupportRadius, cs), points_.i_begin());
    const std::int64_t ib = std::min(floor_cell(x.x() + kSupportRadius, cs), points_.i_end() - 1);
    const std::int64_t ja = std::max(floor_cell(x.y() - kSupportRadius, cs), points_.j_begin());
    const std::int64_t jb = std::min(floor_cell(x.y() + kSupportRadius, cs), points_.j_end() - 1);
    double best = 0.0;
    for (std::int64_t j = ja; j <= jb; ++j)
        for (std::int64_t i = ia; i <= ib; ++i)
            for (const Vec2& p : points_.cell({i, j})) {
                const double dx = x.x() - p.x();
                const double dy = x.y() - p.y();
                const double s = 1.0 - 4.0 * (dx * dx + dy * dy);
                if (s > 0.0) best = std::max(best, std::exp(-1.0 / s));
            }
    return kFloor + best;
}

PoissonMedium resample_outside(const PoissonMedium& medium, double keep_half_width,
                               std::uint64_t new_seed) {
    const PointProcessConfig& cfg = medium.config();
    if (new_seed == cfg.master_seed)
        throw InvalidArgument("re-sampling seed must differ from the master seed");
    const double cells = keep_half_width / cfg.cell_size;
    if (!(keep_half_width > 0.0) || std::abs(cells - std::round(cells)) > 1e-12)
        throw InvalidArgument("keep box half width must be a positive whole number of cells");
    const auto m = static_cast<std::int64_t>(std::llround(cells));

    const PointSet& src = medium.points();
    PointSet out(src.i_begin(), src.j_begin(), src.i_end() - src.i_begin(),
                 src.j_end() - src.j_begin(), src.cell_size());
    PointProcessConfig fresh = cfg;
    fresh.master_seed = new_seed;
    for (std::int64_t j = src.j_begin(); j < src.j_end(); ++j)
        for (std::int64_t i = src.i_begin(); i < src.i_end(); ++i) {
            const bool inside = i >= -m && i < m && j >= -m && j < m;
            if (inside) {
                out.push_cell(src.cell({i, j}));
            } else {
                const auto pts = generate_cell(fresh, {i, j});
                out.push_cell(pts);
            }
        }
    return PoissonMedium(cfg, std::move(out));
}

} // namespace abc2d
