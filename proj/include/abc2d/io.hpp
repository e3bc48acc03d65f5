#pragma once

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <string>
#include <variant>
#include <vector>

#include "abc2d/harness.hpp"

namespace abc2d {

/// CSV with a leading "# schema: <name> v<version>" comment line and doubles
/// printed to 17 significant digits.
class CsvWriter {
public:
    using Cell = std::variant<double, long long, std::uint64_t, std::string>;

    CsvWriter(const std::filesystem::path& path, const std::string& schema, std::vector<std::string> columns);
    void row(std::initializer_list<Cell> cells);
    std::size_t rows() const { return rows_; }

private:
    std::ofstream out_;
    std::size_t columns_;
    std::size_t rows_ = 0;
};

std::string format_double(double v);

/// Each writer returns the paths it created.
using Written = std::vector<std::filesystem::path>;

Written write_runs(const std::filesystem::path& dir, const std::string& stem, const std::vector<RunRecord>& runs);
Written write_ahom(const std::filesystem::path& dir, const AhomStudy& study);
Written write_convergence(const std::filesystem::path& dir, const ConvergenceStudy& study);
Written write_sensitivity(const std::filesystem::path& dir, const SensitivityStudy& study);
Written write_rstar(const std::filesystem::path& dir, const RStarStudy& study);
Written write_points(const std::filesystem::path& dir, const PoissonMedium& medium, double half_width);
Written write_corrector_summary(const std::filesystem::path& dir, std::uint64_t seed,
                                const CorrectorSummary& summary);
Written write_boundary_trace(const std::filesystem::path& dir, const Grid& box, const CorrectorSummary& summary,
                             const SourceQuadrature& source);

std::string summary_text(const AhomStudy& study);
std::string summary_text(const ConvergenceStudy& study);
std::string summary_text(const SensitivityStudy& study);
std::string summary_text(const RStarStudy& study);
std::string failure_text(const std::vector<RunFailure>& failures);

void write_text(const std::filesystem::path& path, const std::string& text);

} // namespace abc2d
