#pragma once

// Instantaneous Topological Map over the latent space. Each node is a
// latent region that owns a local world model and tracks the moving-window
// prediction error of that model, from which its learning progress and the
// intrinsic reward are derived.

#include <cstddef>
#include <deque>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "dualsys/local_model.hpp"
#include "dualsys/nn.hpp"

namespace dualsys {

/// Windowed prediction error and learning progress for one region.
///
/// Both windows count node-local prediction events. While the error window
/// is filling, its mean divides by the current fill. Learning progress is
/// defined once window + lag events have been recorded:
///   LP = mean(lag events ago) - mean(now).
class ProgressTracker {
public:
    ProgressTracker() : ProgressTracker(40, 20) {}
    ProgressTracker(std::size_t window, std::size_t lag);

    /// e must be >= 0.
    void record(double error);

    std::size_t window() const { return window_; }
    std::size_t lag() const { return lag_; }
    long event_count() const { return events_; }
    const std::deque<double>& error_window() const { return errors_; }
    const std::deque<double>& mean_history() const { return means_; }

    /// Mean of the error window; nullopt before the first event.
    std::optional<double> window_mean() const;
    std::optional<double> learning_progress() const;
    /// -LP, or 0 while LP is undefined.
    double intrinsic_reward() const;

private:
    std::size_t window_;
    std::size_t lag_;
    long events_ = 0;
    std::deque<double> errors_;
    std::deque<double> means_;
};

struct ItmNode {
    int id = 0;
    Vec weight;
    std::set<int> neighbors;
    LocalModel model;
    ProgressTracker progress;
};

struct ItmSettings {
    double e_max = 6.0;       // squared-distance mapping resolution
    std::size_t window = 40;  // sigma
    std::size_t lag = 20;     // W
    std::size_t min_nodes = 2;
};

/// Everything one adaptation step did, for tracing and oracle comparison.
struct AdaptEvent {
    int nearest = -1;
    int second = -1;
    bool edge_added = false;
    std::vector<std::pair<int, int>> removed_edges;  // (m, n)
    std::vector<int> removed_nodes;
    std::optional<int> created;
    int best = -1;  // best-matching node after adaptation
};

class ItmMap {
public:
    using ModelFactory = std::function<LocalModel()>;

    /// Starts with two connected nodes at w1 and w2.
    ItmMap(Vec w1, Vec w2, ItmSettings settings, ModelFactory factory);

    /// Matching, edge adaptation and node adaptation for one stimulus.
    AdaptEvent adapt(std::span<const double> stimulus);

    /// Nearest node without touching the map (ties resolve to the lower id).
    int best_match(std::span<const double> stimulus) const;
    std::pair<int, int> two_nearest(std::span<const double> stimulus) const;

    std::size_t size() const { return nodes_.size(); }
    std::size_t dim() const { return dim_; }
    const ItmSettings& settings() const { return settings_; }
    const std::map<int, ItmNode>& nodes() const { return nodes_; }
    const ItmNode& node(int id) const;
    ItmNode& node(int id);
    bool contains(int id) const { return nodes_.count(id) != 0; }
    std::size_t edge_count() const;

    /// Empty string when the graph is consistent: symmetric, irreflexive,
    /// no dangling endpoints, at least min_nodes nodes.
    std::string audit() const;

    /// Text record: header, one line per node (id, weight, neighbors,
    /// error window, mean history, event count).
    void save(std::ostream& os) const;

private:
    int add_node(Vec weight);
    void connect(int a, int b);
    void disconnect(int a, int b);

    ItmSettings settings_;
    ModelFactory factory_;
    std::size_t dim_ = 0;
    int next_id_ = 0;
    std::map<int, ItmNode> nodes_;
};

double squared_distance(std::span<const double> a, std::span<const double> b);

}  // namespace dualsys
