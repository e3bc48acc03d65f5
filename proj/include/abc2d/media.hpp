#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "abc2d/types.hpp"

namespace abc2d {

/// Scalar isotropic conductivity a(x). Implementations must be safe for
/// concurrent reads.
class Medium {
public:
    virtual ~Medium() = default;

    /// Value of a at x. Throws InsufficientSampling outside safe_region().
    virtual double eval(const Vec2& x) const = 0;

    /// Region in which eval() is valid.
    virtual Box safe_region() const = 0;

    virtual double lower_bound() const = 0;
    virtual double upper_bound() const = 0;
};

class ConstantMedium final : public Medium {
public:
    explicit ConstantMedium(double value);

    double eval(const Vec2&) const override { return value_; }
    Box safe_region() const override;
    double lower_bound() const override { return value_; }
    double upper_bound() const override { return value_; }

private:
    double value_;
};

/// Two-phase laminate varying along x1: alpha on [2k w, (2k+1) w), beta on
/// the complementary bands.
class LaminateMedium final : public Medium {
public:
    LaminateMedium(double alpha, double beta, double band_width = 1.0);

    double eval(const Vec2& x) const override;
    Box safe_region() const override;
    double lower_bound() const override;
    double upper_bound() const override;

private:
    double alpha_;
    double beta_;
    double band_width_;
};

/// Medium defined by an arbitrary callable; used for synthetic test fields.
class FunctionMedium final : public Medium {
public:
    FunctionMedium(std::function<double(const Vec2&)> fn, double lower, double upper);

    double eval(const Vec2& x) const override { return fn_(x); }
    Box safe_region() const override;
    double lower_bound() const override { return lower_; }
    double upper_bound() const override { return upper_; }

private:
    std::function<double(const Vec2&)> fn_;
    double lower_;
    double upper_;
};

// ---------------------------------------------------------------------------
// Poisson bump medium
// ---------------------------------------------------------------------------

struct PointProcessConfig {
    double intensity = 1.0;
    std::uint64_t master_seed = 0;
    double cell_size = 1.0;
};

struct CellIndex {
    std::int64_t i = 0;
    std::int64_t j = 0;
    bool operator==(const CellIndex&) const = default;
};

/// Counter-based uniform stream keyed by (seed, i, j). Two streams with the
/// same key produce identical sequences on every platform.
class CellStream {
public:
    CellStream(std::uint64_t seed, std::int64_t i, std::int64_t j);

    std::uint64_t next_u64();
    /// Uniform double in [0, 1) with 53 random bits.
    double uniform();

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

/// Draws the points of one cell: count ~ Poisson(intensity * cell area),
/// locations uniform in [i c, (i+1) c) x [j c, (j+1) c).
std::vector<Vec2> generate_cell(const PointProcessConfig& config, CellIndex cell);

/// Points of a Poisson process stored per unit cell over a rectangular block
/// of cells (compressed row layout).
class PointSet {
public:
    PointSet() = default;

    /// Cells [i0, i0 + ni) x [j0, j0 + nj).
    PointSet(std::int64_t i0, std::int64_t j0, std::int64_t ni, std::int64_t nj, double cell_size);

    std::int64_t i_begin() const { return i0_; }
    std::int64_t j_begin() const { return j0_; }
    std::int64_t i_end() const { return i0_ + ni_; }
    std::int64_t j_end() const { return j0_ + nj_; }
    double cell_size() const { return cell_size_; }

    bool has_cell(CellIndex c) const {
        return c.i >= i0_ && c.i < i0_ + ni_ && c.j >= j0_ && c.j < j0_ + nj_;
    }

    std::span<const Vec2> cell(CellIndex c) const;

    /// Union of all stored cells.
    Box coverage() const;

    std::size_t size() const { return points_.size(); }
    std::size_t cell_count() const { return static_cast<std::size_t>(ni_ * nj_); }

    /// Appends the points of the next cell in row-major (j outer, i inner)
    /// order. Used by the samplers.
    void push_cell(std::span<const Vec2> pts);
    bool complete() const { return offsets_.size() == cell_count() + 1; }

    std::vector<Vec2> all_points() const { return points_; }

    bool operator==(const PointSet&) const;

private:
    std::size_t flat(CellIndex c) const {
        return static_cast<std::size_t>((c.j - j0_) * ni_ + (c.i - i0_));
    }

    std::int64_t i0_ = 0;
    std::int64_t j0_ = 0;
    std::int64_t ni_ = 0;
    std::int64_t nj_ = 0;
    double cell_size_ = 1.0;
    std::vector<std::size_t> offsets_{0};
    std::vector<Vec2> points_;
};

/// Samples every cell intersecting region (closed box of positive area).
PointSet sample_points(const PointProcessConfig& config, const Box& region);

/// The bump exp(-1 / (1 - 4|y|^2)) supported in the open ball of radius 1/2.
double bump(const Vec2& y);

/// a(x) = 1/2 + max_i bump(x - xi_i); the max over an empty set is 0.
class PoissonMedium final : public Medium {
public:
    static constexpr double kFloor = 0.5;
    static constexpr double kSupportRadius = 0.5;

    PoissonMedium(PointProcessConfig config, PointSet points);

    /// Samples the point process over region and builds the medium.
    static PoissonMedium sample(const PointProcessConfig& config, const Box& region);

    double eval(const Vec2& x) const override;
    Box safe_region() const override;
    double lower_bound() const override { return kFloor; }
    double upper_bound() const override;

    const PointProcessConfig& config() const { return config_; }
    const PointSet& points() const { return points_; }

private:
    PointProcessConfig config_;
    PointSet points_;
};

/// Keeps the cells lying inside the centered cube Q_M (M integer number of
/// cells) and redraws every other stored cell from new_seed. The result
/// agrees with the input on Q_{M - 1/2}.
PoissonMedium resample_outside(const PoissonMedium& medium, double keep_half_width,
                               std::uint64_t new_seed);

} // namespace abc2d
