#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace spq {

// Unit-cost accounting for one evaluation run. Not thread-safe; one per run.
struct ResourceMeter {
    std::uint64_t steps = 0;
    std::int64_t aux_cells_now = 0;
    std::int64_t aux_cells_peak = 0;
    std::uint64_t index_cells = 0;

    void step(std::uint64_t n = 1) { steps += n; }
    void alloc(std::int64_t cells)
    {
        aux_cells_now += cells;
        if (aux_cells_now > aux_cells_peak) aux_cells_peak = aux_cells_now;
    }
    void release(std::int64_t cells)
    {
        aux_cells_now -= cells;
        if (aux_cells_now < 0) throw std::logic_error("meter: released more cells than allocated");
    }
    void add_index(std::uint64_t cells) { index_cells += cells; }

    std::string report() const
    {
        return "steps=" + std::to_string(steps) + "\naux_cells_peak=" + std::to_string(aux_cells_peak) +
               "\nindex_cells=" + std::to_string(index_cells) + "\n";
    }
    bool operator==(const ResourceMeter& o) const
    {
        return steps == o.steps && aux_cells_now == o.aux_cells_now && aux_cells_peak == o.aux_cells_peak &&
               index_cells == o.index_cells;
    }
};

} // namespace spq
