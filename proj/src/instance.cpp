#include "stomatch/instance.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "stomatch/error.hpp"
#include "stomatch/rng.hpp"

namespace stomatch {

using nlohmann::json;

std::string to_string(Mode mode) {
    switch (mode) {
        case Mode::unweighted: return "unweighted";
        case Mode::vertex_weighted: return "vertex_weighted";
        case Mode::general: return "general";
    }
    fail(ErrorCode::internal, "unknown mode enum value");
}

Mode mode_from_string(const std::string& s) {
    if (s == "unweighted") return Mode::unweighted;
    if (s == "vertex_weighted") return Mode::vertex_weighted;
    if (s == "general") return Mode::general;
    fail(ErrorCode::parse, "mode: expected unweighted|vertex_weighted|general, got \"" + s + "\"");
}

namespace {

void check_id(const std::string& id, const char* side) {
    if (id.empty()) fail(ErrorCode::validate, std::string(side) + ": id must be a nonempty string");
    if (id.find(':') != std::string::npos)
        fail(ErrorCode::validate, std::string(side) + " id \"" + id + "\": ':' is reserved for export keys");
    if (id == "_bot")
        fail(ErrorCode::validate, std::string(side) + " id \"_bot\" is reserved for the dummy option");
}

void check_finite(double v, const std::string& field) {
    if (!std::isfinite(v)) fail(ErrorCode::validate, field + ": value must be finite");
}

} // namespace

Instance::Instance(Mode mode, std::vector<OfflineVertex> offline, std::vector<OnlineType> types)
    : mode_(mode), offline_(std::move(offline)), types_(std::move(types)) {
    for (int j = 0; j < static_cast<int>(offline_.size()); ++j) {
        const auto& v = offline_[j];
        check_id(v.id, "offline");
        check_finite(v.weight, "offline \"" + v.id + "\" weight");
        if (v.weight < 0) fail(ErrorCode::validate, "offline \"" + v.id + "\": weight must be >= 0");
        if (!offline_by_id_.emplace(v.id, j).second)
            fail(ErrorCode::validate, "offline \"" + v.id + "\": duplicate id");
        if (mode_ == Mode::unweighted && v.weight != 1.0)
            fail(ErrorCode::validate, "offline \"" + v.id + "\": unweighted mode requires weight 1");
    }
    total_rate_ = 0.0;
    for (int t = 0; t < static_cast<int>(types_.size()); ++t) {
        auto& ty = types_[t];
        check_id(ty.id, "type");
        check_finite(ty.rate, "type \"" + ty.id + "\" rate");
        if (ty.rate <= 0) fail(ErrorCode::validate, "type \"" + ty.id + "\": rate must be > 0");
        if (!type_by_id_.emplace(ty.id, t).second)
            fail(ErrorCode::validate, "type \"" + ty.id + "\": duplicate id");
        std::sort(ty.edges.begin(), ty.edges.end(), [&](const Edge& a, const Edge& b) {
            return offline_[a.offline].id < offline_[b.offline].id;
        });
        int prev = -1;
        for (const Edge& e : ty.edges) {
            if (e.offline < 0 || e.offline >= static_cast<int>(offline_.size()))
                fail(ErrorCode::internal, "type \"" + ty.id + "\": edge references unknown offline index");
            if (e.offline == prev)
                fail(ErrorCode::validate, "type \"" + ty.id + "\": duplicate edge to \"" + offline_[e.offline].id + "\"");
            prev = e.offline;
            const std::string field = "edge " + ty.id + ":" + offline_[e.offline].id;
            check_finite(e.weight, field);
            if (e.weight < 0) fail(ErrorCode::validate, field + ": weight must be >= 0");
            if (mode_ == Mode::unweighted && e.weight != 0.0 && e.weight != 1.0)
                fail(ErrorCode::validate, field + ": unweighted mode requires weights in {0,1}");
            if (mode_ == Mode::vertex_weighted && e.weight != 0.0 && e.weight != offline_[e.offline].weight)
                fail(ErrorCode::validate, field + ": vertex_weighted mode requires weight in {0, w_j}");
        }
        total_rate_ += ty.rate;
    }
}

int Instance::offline_index(const std::string& id) const {
    auto it = offline_by_id_.find(id);
    return it == offline_by_id_.end() ? -1 : it->second;
}

int Instance::type_index(const std::string& id) const {
    auto it = type_by_id_.find(id);
    return it == type_by_id_.end() ? -1 : it->second;
}

double Instance::edge_weight(int type, int offline) const {
    for (const Edge& e : types_[type].edges)
        if (e.offline == offline) return e.weight;
    return 0.0;
}

bool Instance::has_edge(int type, int offline) const {
    for (const Edge& e : types_[type].edges)
        if (e.offline == offline) return true;
    return false;
}

std::string Instance::to_json() const {
    json doc;
    doc["mode"] = to_string(mode_);
    doc["offline"] = json::array();
    for (const auto& v : offline_) doc["offline"].push_back({{"id", v.id}, {"weight", v.weight}});
    doc["types"] = json::array();
    for (const auto& ty : types_) {
        json edges = json::object();
        for (const Edge& e : ty.edges) edges[offline_[e.offline].id] = e.weight;
        doc["types"].push_back({{"id", ty.id}, {"rate", ty.rate}, {"edges", edges}});
    }
    return doc.dump(2) + "\n";
}

namespace {

void reject_unknown_keys(const json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool ok = false;
        for (const char* k : allowed) ok = ok || it.key() == k;
        if (!ok) fail(ErrorCode::parse, where + ": unknown key \"" + it.key() + "\"");
    }
}

const json& require_key(const json& obj, const char* key, const std::string& where) {
    auto it = obj.find(key);
    if (it == obj.end()) fail(ErrorCode::parse, where + ": missing key \"" + key + "\"");
    return *it;
}

double require_number(const json& v, const std::string& where) {
    if (!v.is_number()) fail(ErrorCode::parse, where + ": expected a number");
    return v.get<double>();
}

std::string require_string(const json& v, const std::string& where) {
    if (!v.is_string()) fail(ErrorCode::parse, where + ": expected a string");
    return v.get<std::string>();
}

} // namespace

Instance Instance::from_json(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        fail(ErrorCode::parse, std::string("instance JSON: ") + e.what());
    }
    if (!doc.is_object()) fail(ErrorCode::parse, "instance JSON: top level must be an object");
    reject_unknown_keys(doc, {"mode", "offline", "types"}, "instance");
    const Mode mode = mode_from_string(require_string(require_key(doc, "mode", "instance"), "mode"));

    const json& joff = require_key(doc, "offline", "instance");
    if (!joff.is_array()) fail(ErrorCode::parse, "offline: expected an array");
    std::vector<OfflineVertex> offline;
    std::map<std::string, int> offline_by_id;
    for (const json& jv : joff) {
        if (!jv.is_object()) fail(ErrorCode::parse, "offline entry: expected an object");
        reject_unknown_keys(jv, {"id", "weight"}, "offline entry");
        OfflineVertex v;
        v.id = require_string(require_key(jv, "id", "offline entry"), "offline id");
        v.weight = require_number(require_key(jv, "weight", "offline \"" + v.id + "\""), "offline \"" + v.id + "\" weight");
        offline_by_id.emplace(v.id, static_cast<int>(offline.size()));
        offline.push_back(std::move(v));
    }

    const json& jtypes = require_key(doc, "types", "instance");
    if (!jtypes.is_array()) fail(ErrorCode::parse, "types: expected an array");
    std::vector<OnlineType> types;
    for (const json& jt : jtypes) {
        if (!jt.is_object()) fail(ErrorCode::parse, "types entry: expected an object");
        reject_unknown_keys(jt, {"id", "rate", "edges"}, "types entry");
        OnlineType ty;
        ty.id = require_string(require_key(jt, "id", "types entry"), "type id");
        ty.rate = require_number(require_key(jt, "rate", "type \"" + ty.id + "\""), "type \"" + ty.id + "\" rate");
        const json& jedges = require_key(jt, "edges", "type \"" + ty.id + "\"");
        if (!jedges.is_object()) fail(ErrorCode::parse, "type \"" + ty.id + "\" edges: expected an object");
        for (auto it = jedges.begin(); it != jedges.end(); ++it) {
            auto found = offline_by_id.find(it.key());
            if (found == offline_by_id.end())
                fail(ErrorCode::validate, "type \"" + ty.id + "\": edge to unknown offline \"" + it.key() + "\"");
            ty.edges.push_back({found->second, require_number(it.value(), "edge " + ty.id + ":" + it.key())});
        }
        types.push_back(std::move(ty));
    }
    return Instance(mode, std::move(offline), std::move(types));
}

Instance load_instance(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::io, "cannot open \"" + path + "\" for reading");
    std::stringstream buf;
    buf << in.rdbuf();
    return Instance::from_json(buf.str());
}

void save_instance(const Instance& inst, const std::string& path) {
    std::ofstream out(path);
    if (!out) fail(ErrorCode::io, "cannot open \"" + path + "\" for writing");
    out << inst.to_json();
    if (!out) fail(ErrorCode::io, "write to \"" + path + "\" failed");
}

Instance gen_random_instance(int n_types, int n_offline, double density,
                             std::pair<double, double> rate_range,
                             std::pair<double, double> weight_range,
                             Mode mode, std::uint64_t seed) {
    if (n_types <= 0 || n_offline <= 0) fail(ErrorCode::domain, "gen_random_instance: sizes must be positive");
    if (!(density > 0.0 && density <= 1.0)) fail(ErrorCode::domain, "gen_random_instance: density must be in (0,1]");
    if (!(rate_range.first > 0.0 && rate_range.first <= rate_range.second))
        fail(ErrorCode::domain, "gen_random_instance: rate range must satisfy 0 < lo <= hi");
    if (!(weight_range.first > 0.0 && weight_range.first <= weight_range.second))
        fail(ErrorCode::domain, "gen_random_instance: weight range must satisfy 0 < lo <= hi");

    Rng rng(seed, 0xa5a5a5a5ULL);
    std::vector<OfflineVertex> offline(n_offline);
    for (int j = 0; j < n_offline; ++j) {
        offline[j].id = "j" + std::to_string(j + 1);
        offline[j].weight =
            mode == Mode::vertex_weighted ? rng.next_range(weight_range.first, weight_range.second) : 1.0;
    }
    std::vector<OnlineType> types(n_types);
    for (int t = 0; t < n_types; ++t) {
        auto& ty = types[t];
        ty.id = "i" + std::to_string(t + 1);
        ty.rate = rng.next_range(rate_range.first, rate_range.second);
        // Every type must end with at least one edge; resample until it does.
        do {
            ty.edges.clear();
            for (int j = 0; j < n_offline; ++j) {
                if (rng.next_double() < density) {
                    double w = 1.0;
                    if (mode == Mode::vertex_weighted) w = offline[j].weight;
                    if (mode == Mode::general) w = rng.next_range(weight_range.first, weight_range.second);
                    ty.edges.push_back({j, w});
                }
            }
        } while (ty.edges.empty());
    }
    return Instance(mode, std::move(offline), std::move(types));
}

Instance gen_structured_instance(const std::string& family, int a, int b) {
    if (a <= 0 || (family == "complete_uniform" && b <= 0))
        fail(ErrorCode::domain, "gen_structured_instance: size params must be positive");
    if (family == "complete_uniform") {
        std::vector<OfflineVertex> offline(b);
        for (int j = 0; j < b; ++j) offline[j] = {"j" + std::to_string(j + 1), 1.0};
        std::vector<OnlineType> types(a);
        for (int t = 0; t < a; ++t) {
            types[t].id = "i" + std::to_string(t + 1);
            types[t].rate = 1.0;
            for (int j = 0; j < b; ++j) types[t].edges.push_back({j, 1.0});
        }
        return Instance(Mode::unweighted, std::move(offline), std::move(types));
    }
    if (family == "star") {
        std::vector<OfflineVertex> offline(a);
        std::vector<OnlineType> types(1);
        types[0].id = "i1";
        types[0].rate = 1.0;
        for (int j = 0; j < a; ++j) {
            offline[j] = {"j" + std::to_string(j + 1), 1.0};
            types[0].edges.push_back({j, 1.0});
        }
        return Instance(Mode::unweighted, std::move(offline), std::move(types));
    }
    if (family == "two_cycle") {
        std::vector<OfflineVertex> offline(a);
        for (int j = 0; j < a; ++j) offline[j] = {"j" + std::to_string(j + 1), 1.0};
        std::vector<OnlineType> types(a);
        for (int t = 0; t < a; ++t) {
            types[t].id = "i" + std::to_string(t + 1);
            types[t].rate = 1.0;
            types[t].edges.push_back({t, 1.0});
            if (a > 1) types[t].edges.push_back({(t + 1) % a, 1.0});
        }
        return Instance(Mode::unweighted, std::move(offline), std::move(types));
    }
    fail(ErrorCode::domain, "gen_structured_instance: unknown family \"" + family + "\"");
}

} // namespace stomatch
