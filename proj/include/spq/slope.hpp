#pragma once

#include "spq/eval.hpp"
#include "spq/generate.hpp"
#include "spq/plan.hpp"

#include <cmath>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace spq {

struct SlopeSample {
    size_t n = 0;          // requested tuples per relation
    size_t db_size = 0;    // tuples actually generated
    std::int64_t aux = 0;  // aux_cells_peak
    std::uint64_t steps = 0;
};

struct SlopeReport {
    std::vector<SlopeSample> samples;
    double space_slope = 0, time_slope = 0;
    double space_bound = 0, time_bound = 0;  // predicted exponent + tolerance
    bool space_ok = false, time_ok = false;

    bool pass() const { return space_ok && time_ok; }
    std::string text() const;
};

// Least-squares slope of log y against log x. Zero counts are read as 1.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

void check_sizes(const std::vector<size_t>& sizes);  // >= 4, strictly increasing

// Generates one instance per size and runs `run` on it. Upper-bound checks
// only: a slope may come out well below the predicted exponent.
template <class S>
SlopeReport measure_slopes(const Query& q, const std::function<EvalResult<S>(const Database<S>&)>& run,
                           const std::vector<size_t>& sizes, std::uint64_t seed, Shape shape, double pred_s,
                           double pred_t, double tolerance)
{
    check_sizes(sizes);
    SlopeReport r;
    std::vector<double> xs, aux, steps;
    for (size_t n : sizes) {
        Dictionary dict;
        Database<S> db = generate_instance<S>(q, n, seed, shape, dict);
        EvalResult<S> res = run(db);
        r.samples.push_back({n, db.size(), res.meter.aux_cells_peak, res.meter.steps});
        xs.push_back(static_cast<double>(n));
        aux.push_back(static_cast<double>(res.meter.aux_cells_peak));
        steps.push_back(static_cast<double>(res.meter.steps));
    }
    r.space_slope = loglog_slope(xs, aux);
    r.time_slope = loglog_slope(xs, steps);
    r.space_bound = pred_s + tolerance;
    r.time_bound = pred_t + tolerance;
    r.space_ok = r.space_slope <= r.space_bound;
    r.time_ok = r.time_slope <= r.time_bound;
    return r;
}

} // namespace spq
