#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace stomatch {

enum class Mode { unweighted, vertex_weighted, general };

std::string to_string(Mode mode);
Mode mode_from_string(const std::string& s);

struct OfflineVertex {
    std::string id;
    double weight = 1.0;
};

struct Edge {
    int offline = -1;   // index into Instance::offline
    double weight = 0.0;
};

struct OnlineType {
    std::string id;
    double rate = 0.0;
    std::vector<Edge> edges;   // sorted by offline id ascending; missing edge == weight 0
};

// Immutable after construction; validated on every construction path.
class Instance {
public:
    // Builds indexes, sorts edges by offline id, validates every invariant.
    // Throws Error(validate) naming the offending field.
    Instance(Mode mode, std::vector<OfflineVertex> offline, std::vector<OnlineType> types);

    Mode mode() const { return mode_; }
    const std::vector<OfflineVertex>& offline() const { return offline_; }
    const std::vector<OnlineType>& types() const { return types_; }
    double total_rate() const { return total_rate_; }

    int offline_index(const std::string& id) const;   // -1 when absent
    int type_index(const std::string& id) const;      // -1 when absent

    // Edge weight by index pair; 0 when the edge is absent.
    double edge_weight(int type, int offline) const;
    bool has_edge(int type, int offline) const;

    std::string to_json() const;
    static Instance from_json(const std::string& text);

private:
    Mode mode_;
    std::vector<OfflineVertex> offline_;
    std::vector<OnlineType> types_;
    std::map<std::string, int> offline_by_id_;
    std::map<std::string, int> type_by_id_;
    double total_rate_ = 0.0;
};

Instance load_instance(const std::string& path);
void save_instance(const Instance& inst, const std::string& path);

Instance gen_random_instance(int n_types, int n_offline, double density,
                             std::pair<double, double> rate_range,
                             std::pair<double, double> weight_range,
                             Mode mode, std::uint64_t seed);

// Families: complete_uniform(n,m) -- complete bipartite, all rates 1, unweighted;
// star(m) -- one type, rate 1, edges to m offline vertices; two_cycle(n) -- type i
// adjacent to offline i and i+1 mod n.
Instance gen_structured_instance(const std::string& family, int a, int b = 0);

} // namespace stomatch
