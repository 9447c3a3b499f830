#include "spq/plan_io.hpp"

#include <fstream>
#include <map>
#include <sstream>

namespace spq {

using nlohmann::json;

namespace {

int var_id(const Query& q, const json& j)
{
    if (!j.is_string()) throw PlanError("variable names must be strings");
    int v = q.find_var(j.get<std::string>());
    if (v < 0) throw PlanError("plan names unknown variable '" + j.get<std::string>() + "'");
    return v;
}

const json& field(const json& j, const char* key)
{
    if (!j.is_object() || !j.contains(key)) throw PlanError(std::string("plan is missing field '") + key + "'");
    return j.at(key);
}

json tree_json(const Query& q, const PseudoTree& t, int v)
{
    json ch = json::array();
    for (int c : t.children[v]) ch.push_back(tree_json(q, t, c));
    return {{"var", q.names[v]}, {"children", ch}};
}

void read_tree(const Query& q, const json& j, int parent, std::vector<int>& par, VarSet& nodes)
{
    int v = var_id(q, field(j, "var"));
    if (has(nodes, v)) throw PlanError("variable " + q.names[v] + " occurs twice in the tree");
    nodes |= bit(v);
    par[v] = parent;
    if (j.contains("children")) {
        if (!j.at("children").is_array()) throw PlanError("'children' must be an array");
        for (const auto& c : j.at("children")) read_tree(q, c, v, par, nodes);
    }
}

json names_json(const Query& q, VarSet s)
{
    json a = json::array();
    for (int v : sorted_by_name(q, s)) a.push_back(q.names[v]);
    return a;
}

std::vector<int> read_list(const Query& q, const json& j)
{
    if (!j.is_array()) throw PlanError("expected a list of variable names");
    std::vector<int> out;
    for (const auto& x : j) out.push_back(var_id(q, x));
    return out;
}

json base_json(const Query& q, const Plan& p)
{
    json j;
    j["kind"] = "ptcr";
    j["tree"] = tree_json(q, p.tree, p.real_root());
    json cs = json::object();
    for (size_t v = 0; v < p.cache_size.size(); ++v)
        if (p.cache_size[v] != 0) cs[q.names[v]] = p.cache_size[v];
    j["cache_size"] = cs;
    if (!p.inputs.empty()) {
        json in = json::array();
        for (int v : p.inputs) in.push_back(q.names[v]);
        j["inputs"] = in;
    }
    return j;
}

void read_base(const Query& q, const json& j, Plan& p)
{
    std::vector<int> par(q.num_ids(), -1);
    VarSet nodes = 0;
    read_tree(q, field(j, "tree"), -1, par, nodes);
    if (j.contains("inputs")) p.inputs = read_list(q, j.at("inputs"));
    int real_root = -1;
    for_each_var(nodes, [&](int v) {
        if (par[v] < 0) real_root = v;
    });
    for (size_t i = 0; i < p.inputs.size(); ++i) {
        int v = p.inputs[i];
        if (has(nodes, v)) throw PlanError("input " + q.names[v] + " also occurs in the tree");
        nodes |= bit(v);
        par[v] = i == 0 ? -1 : p.inputs[i - 1];
    }
    if (!p.inputs.empty()) par[real_root] = p.inputs.back();
    p.tree = PseudoTree::from_parents(q, nodes, par);
    p.cache_size.assign(q.num_ids(), 0);
    if (j.contains("cache_size")) {
        const json& cs = j.at("cache_size");
        if (!cs.is_object()) throw PlanError("'cache_size' must be an object");
        for (auto it = cs.begin(); it != cs.end(); ++it) {
            int v = var_id(q, json(it.key()));
            if (!it.value().is_number_integer() || it.value().get<long long>() < 0)
                throw PlanError("cache_size of " + it.key() + " must be a nonnegative integer");
            p.cache_size[v] = static_cast<int>(std::min<long long>(it.value().get<long long>(), kMaxVars));
        }
    }
}

} // namespace

json plan_to_json(const Query& q, const Plan& p)
{
    json j;
    switch (p.kind) {
    case PlanKind::GJ: {
        j["kind"] = "gj";
        json o = json::array();
        for (int v : p.order) o.push_back(q.names[v]);
        j["order"] = o;
        break;
    }
    case PlanKind::PT:
        j["kind"] = "pt";
        j["tree"] = tree_json(q, p.tree, p.tree.root);
        break;
    case PlanKind::PTC:
        j["kind"] = "ptc";
        j["tree"] = tree_json(q, p.tree, p.tree.root);
        j["caches"] = names_json(q, p.caches);
        break;
    case PlanKind::PTCR: j = base_json(q, p); break;
    case PlanKind::RPT: {
        j["kind"] = "rpt";
        j["base"] = base_json(q, p);
        TreeInfo info = analyze_tree(q, p.tree);
        PTCRSets sets = ptcr_sets(p.tree, info, p.cache_size);
        json reps = json::array();
        for (size_t i = 0; i < p.anchors.size(); ++i) {
            RptSubQuery sq = rpt_subquery(q, p.tree, info, sets, p.anchors[i]);
            reps.push_back({{"anchor", q.names[p.anchors[i]]}, {"sub", plan_to_json(sq.q, p.subs[i])}});
        }
        j["replacements"] = reps;
        break;
    }
    case PlanKind::TD: {
        j["kind"] = "td";
        auto sub = td_subqueries(q, p);
        json bags = json::array();
        for (size_t v = 0; v < p.bags.size(); ++v)
            bags.push_back({{"id", p.bag_ids[v]}, {"vars", names_json(q, p.bags[v])},
                            {"plan", plan_to_json(sub[v].q, p.subs[v])}});
        j["bags"] = bags;
        json edges = json::array();
        for (size_t v = 0; v < p.bags.size(); ++v)
            if (p.bag_parent[v] >= 0) edges.push_back({p.bag_ids[p.bag_parent[v]], p.bag_ids[v]});
        j["edges"] = edges;
        json cov = json::object();
        for (size_t i = 0; i < q.atoms.size() && i < p.covering.size(); ++i)
            cov[q.atoms[i].name] = p.bag_ids[p.covering[i]];
        j["covering"] = cov;
        break;
    }
    }
    return j;
}

Plan plan_from_json(const Query& q, const json& j)
{
    if (!j.is_object()) throw PlanError("plan must be a JSON object");
    const json& k = field(j, "kind");
    if (!k.is_string()) throw PlanError("'kind' must be a string");
    Plan p;
    p.kind = parse_kind(k.get<std::string>());
    switch (p.kind) {
    case PlanKind::GJ: p.order = read_list(q, field(j, "order")); break;
    case PlanKind::PT:
    case PlanKind::PTC: {
        std::vector<int> par(q.num_ids(), -1);
        VarSet nodes = 0;
        read_tree(q, field(j, "tree"), -1, par, nodes);
        p.tree = PseudoTree::from_parents(q, nodes, par);
        if (p.kind == PlanKind::PTC) p.caches = mask_of(read_list(q, field(j, "caches")));
        break;
    }
    case PlanKind::PTCR: read_base(q, j, p); break;
    case PlanKind::RPT: {
        const json& base = field(j, "base");
        read_base(q, base, p);
        if (base.contains("kind") && base.at("kind") != "ptcr") throw PlanError("rpt base must be a ptcr");
        if (j.contains("replacements")) {
            const json& reps = j.at("replacements");
            if (!reps.is_array()) throw PlanError("'replacements' must be an array");
            for (const auto& r : reps) p.anchors.push_back(var_id(q, field(r, "anchor")));
            TreeInfo info = analyze_tree(q, p.tree);
            PTCRSets sets = ptcr_sets(p.tree, info, p.cache_size);
            size_t i = 0;
            for (const auto& r : reps) {
                int a = p.anchors[i++];
                if (!has(p.tree.nodes, a) || info.depth[a] < 0)
                    throw PlanError("replacement anchor " + q.names[a] + " is not in the base tree");
                RptSubQuery sq = rpt_subquery(q, p.tree, info, sets, a);
                p.subs.push_back(plan_from_json(sq.q, field(r, "sub")));
            }
        }
        break;
    }
    case PlanKind::TD: {
        const json& bags = field(j, "bags");
        if (!bags.is_array() || bags.empty()) throw PlanError("'bags' must be a nonempty array");
        std::map<std::string, int> index;
        for (const auto& b : bags) {
            const json& id = field(b, "id");
            if (!id.is_string()) throw PlanError("bag id must be a string");
            if (index.count(id.get<std::string>())) throw PlanError("duplicate bag id " + id.get<std::string>());
            index[id.get<std::string>()] = static_cast<int>(p.bag_ids.size());
            p.bag_ids.push_back(id.get<std::string>());
            p.bags.push_back(mask_of(read_list(q, field(b, "vars"))));
        }
        p.bag_parent.assign(p.bags.size(), -1);
        auto bag_of = [&](const json& x) {
            if (!x.is_string() || !index.count(x.get<std::string>()))
                throw PlanError("unknown bag id " + x.dump());
            return index.at(x.get<std::string>());
        };
        if (j.contains("edges")) {
            for (const auto& e : j.at("edges")) {
                if (!e.is_array() || e.size() != 2) throw PlanError("edges must be [parent, child] pairs");
                int c = bag_of(e[1]);
                if (p.bag_parent[c] >= 0) throw PlanError("bag " + p.bag_ids[c] + " has two parents");
                p.bag_parent[c] = bag_of(e[0]);
            }
        }
        const json& cov = field(j, "covering");
        p.covering.assign(q.atoms.size(), -1);
        for (auto it = cov.begin(); it != cov.end(); ++it) {
            int a = q.find_atom(it.key());
            if (a < 0) throw PlanError("covering names unknown relation " + it.key());
            p.covering[a] = bag_of(it.value());
        }
        for (size_t i = 0; i < q.atoms.size(); ++i)
            if (p.covering[i] < 0) throw PlanError("covering has no bag for " + q.atoms[i].name);
        auto sub = td_subqueries(q, p);
        size_t v = 0;
        for (const auto& b : bags) p.subs.push_back(plan_from_json(sub[v++].q, field(b, "plan")));
        break;
    }
    }
    return p;
}

std::string format_plan(const Query& q, const Plan& p)
{
    return plan_to_json(q, p).dump(2) + "\n";
}

Plan parse_plan(const Query& q, const std::string& text)
{
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw PlanError(std::string("plan is not valid JSON: ") + e.what());
    }
    return plan_from_json(q, j);
}

Plan load_plan(const Query& q, const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw PlanError("cannot open plan file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_plan(q, ss.str());
}

namespace {

std::string tree_text(const Query& q, const PseudoTree& t, int v)
{
    std::string s = q.names[v];
    if (t.children[v].empty()) return s;
    s += "(";
    for (size_t i = 0; i < t.children[v].size(); ++i) s += (i ? "," : "") + tree_text(q, t, t.children[v][i]);
    return s + ")";
}

} // namespace

std::string describe_plan(const Query& q, const Plan& p)
{
    switch (p.kind) {
    case PlanKind::GJ: {
        std::string s = "gj ";
        for (size_t i = 0; i < p.order.size(); ++i) s += (i ? "-" : "") + q.names[p.order[i]];
        return s;
    }
    case PlanKind::PT: return "pt " + tree_text(q, p.tree, p.tree.root);
    case PlanKind::PTC: return "ptc " + tree_text(q, p.tree, p.tree.root) + " caches{" + q.set_name(p.caches) + "}";
    default: return kind_name(p.kind) + " " + plan_to_json(q, p).dump();
    }
}

} // namespace spq
