#include "spq/slope.hpp"

#include <fmt/format.h>

namespace spq {

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y)
{
    if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("slope fit needs at least two points");
    size_t n = x.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (size_t i = 0; i < n; ++i) {
        double lx = std::log(x[i]);
        double ly = std::log(std::max(1.0, y[i]));
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    double den = n * sxx - sx * sx;
    if (den == 0) throw std::invalid_argument("slope fit needs distinct sizes");
    return (n * sxy - sx * sy) / den;
}

void check_sizes(const std::vector<size_t>& sizes)
{
    if (sizes.size() < 4) throw std::invalid_argument("slope needs at least 4 sizes");
    for (size_t i = 0; i < sizes.size(); ++i) {
        if (sizes[i] < 1) throw std::invalid_argument("sizes must be positive");
        if (i && sizes[i] <= sizes[i - 1]) throw std::invalid_argument("sizes must be strictly increasing");
    }
}

std::string SlopeReport::text() const
{
    std::string out = "n\ttuples\taux_cells_peak\tsteps\n";
    for (const auto& s : samples) out += fmt::format("{}\t{}\t{}\t{}\n", s.n, s.db_size, s.aux, s.steps);
    out += fmt::format("space_slope={:.3f} bound={:.3f} {}\n", space_slope + 0.0, space_bound, space_ok ? "PASS" : "FAIL");
    out += fmt::format("time_slope={:.3f} bound={:.3f} {}\n", time_slope + 0.0, time_bound, time_ok ? "PASS" : "FAIL");
    return out;
}

} // namespace spq
