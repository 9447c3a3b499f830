#pragma once

#include "spq/plan.hpp"

#include <json.hpp>

#include <string>

namespace spq {

// Plan documents. Variables are referred to by name; trees are nested
// {"var": ..., "children": [...]} objects with children sorted by name.
//
//   gj   {"kind":"gj", "order":["A","B",...]}
//   pt   {"kind":"pt", "tree":{...}}
//   ptc  {"kind":"ptc", "tree":{...}, "caches":["B",...]}
//   ptcr {"kind":"ptcr", "tree":{...}, "cache_size":{"E":1,...}, "inputs":["L",...]}
//   rpt  {"kind":"rpt", "base":{ptcr}, "replacements":[{"anchor":"F", "sub":{ptcr|rpt}}]}
//   td   {"kind":"td", "bags":[{"id":"v","vars":[...],"plan":{...}}],
//         "edges":[["parent","child"],...], "covering":{"R1":"v",...}}
//
// In ptcr/rpt the tree is rooted at the real root; "inputs" lists the input
// chain from the top. Missing cache_size entries mean 0.
nlohmann::json plan_to_json(const Query& q, const Plan& p);
Plan plan_from_json(const Query& q, const nlohmann::json& j);

std::string format_plan(const Query& q, const Plan& p);  // pretty JSON
Plan parse_plan(const Query& q, const std::string& text);
Plan load_plan(const Query& q, const std::string& path);

// One-line human summary, e.g. "pt B(A,C)".
std::string describe_plan(const Query& q, const Plan& p);

} // namespace spq
