#include "dualsys/itm.hpp"

#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace dualsys {

// ---------------------------------------------------------- ProgressTracker

ProgressTracker::ProgressTracker(std::size_t window, std::size_t lag) : window_(window), lag_(lag) {
    if (window == 0) throw std::invalid_argument("ProgressTracker: window must be positive");
}

void ProgressTracker::record(double error) {
    if (!(error >= 0.0)) throw std::invalid_argument("ProgressTracker: prediction error must be >= 0");
    errors_.push_back(error);
    if (errors_.size() > window_) errors_.pop_front();
    means_.push_back(*window_mean());
    if (means_.size() > lag_ + 1) means_.pop_front();
    ++events_;
}

std::optional<double> ProgressTracker::window_mean() const {
    if (errors_.empty()) return std::nullopt;
    const double sum = std::accumulate(errors_.begin(), errors_.end(), 0.0);
    return sum / static_cast<double>(errors_.size());
}

std::optional<double> ProgressTracker::learning_progress() const {
    if (events_ < static_cast<long>(window_ + lag_)) return std::nullopt;
    return means_.front() - means_.back();
}

double ProgressTracker::intrinsic_reward() const {
    const auto lp = learning_progress();
    return lp ? -*lp : 0.0;
}

// ------------------------------------------------------------------ ItmMap

double squared_distance(std::span<const double> a, std::span<const double> b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d += (a[i] - b[i]) * (a[i] - b[i]);
    return d;
}

namespace {

double dot_of_differences(std::span<const double> a, std::span<const double> b, std::span<const double> c,
                          std::span<const double> d) {
    // (a - b) . (c - d)
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (c[i] - d[i]);
    return s;
}

}  // namespace

ItmMap::ItmMap(Vec w1, Vec w2, ItmSettings settings, ModelFactory factory)
    : settings_(settings), factory_(std::move(factory)), dim_(w1.size()) {
    if (w1.size() != w2.size() || w1.empty()) throw std::invalid_argument("ItmMap: bad initial weights");
    if (settings_.min_nodes < 2) throw std::invalid_argument("ItmMap: at least two nodes are required");
    const int a = add_node(std::move(w1));
    const int b = add_node(std::move(w2));
    connect(a, b);
}

int ItmMap::add_node(Vec weight) {
    ItmNode n;
    n.id = next_id_++;
    n.weight = std::move(weight);
    if (factory_) n.model = factory_();
    n.progress = ProgressTracker(settings_.window, settings_.lag);
    const int id = n.id;
    nodes_.emplace(id, std::move(n));
    return id;
}

void ItmMap::connect(int a, int b) {
    nodes_.at(a).neighbors.insert(b);
    nodes_.at(b).neighbors.insert(a);
}

void ItmMap::disconnect(int a, int b) {
    nodes_.at(a).neighbors.erase(b);
    nodes_.at(b).neighbors.erase(a);
}

const ItmNode& ItmMap::node(int id) const {
    auto it = nodes_.find(id);
    if (it == nodes_.end()) throw std::out_of_range("ItmMap: unknown node " + std::to_string(id));
    return it->second;
}

ItmNode& ItmMap::node(int id) {
    auto it = nodes_.find(id);
    if (it == nodes_.end()) throw std::out_of_range("ItmMap: unknown node " + std::to_string(id));
    return it->second;
}

std::pair<int, int> ItmMap::two_nearest(std::span<const double> stimulus) const {
    if (stimulus.size() != dim_) throw std::invalid_argument("ItmMap: stimulus dim mismatch");
    int best = -1, second = -1;
    double best_d = std::numeric_limits<double>::infinity();
    double second_d = std::numeric_limits<double>::infinity();
    for (const auto& [id, n] : nodes_) {
        const double d = squared_distance(stimulus, n.weight);
        if (d < best_d) {
            second = best;
            second_d = best_d;
            best = id;
            best_d = d;
        } else if (d < second_d) {
            second = id;
            second_d = d;
        }
    }
    return {best, second};
}

int ItmMap::best_match(std::span<const double> stimulus) const { return two_nearest(stimulus).first; }

AdaptEvent ItmMap::adapt(std::span<const double> stimulus) {
    AdaptEvent ev;
    const auto [n, n2] = two_nearest(stimulus);
    ev.nearest = n;
    ev.second = n2;

    // Edge adaptation.
    if (!nodes_.at(n).neighbors.count(n2)) {
        connect(n, n2);
        ev.edge_added = true;
    }
    const Vec& wn = nodes_.at(n).weight;
    const Vec& wn2 = nodes_.at(n2).weight;
    const std::vector<int> neighbors(nodes_.at(n).neighbors.begin(), nodes_.at(n).neighbors.end());
    for (int m : neighbors) {
        const Vec& wm = nodes_.at(m).weight;
        if (dot_of_differences(wn, wn2, wm, wn2) < 0.0) {
            disconnect(m, n);
            ev.removed_edges.emplace_back(m, n);
            if (nodes_.at(m).neighbors.empty() && nodes_.size() > settings_.min_nodes) {
                nodes_.erase(m);
                ev.removed_nodes.push_back(m);
            }
        }
    }

    // Node adaptation.
    const Vec& wn_after = nodes_.at(n).weight;
    const Vec& wn2_after = nodes_.at(n2).weight;
    Vec phi(stimulus.begin(), stimulus.end());
    if (dot_of_differences(wn_after, phi, wn2_after, phi) > 0.0 &&
        squared_distance(phi, wn_after) > settings_.e_max) {
        const int v = add_node(std::move(phi));
        connect(v, n);
        ev.created = v;
    }
    ev.best = ev.created ? *ev.created : n;
    return ev;
}

std::size_t ItmMap::edge_count() const {
    std::size_t twice = 0;
    for (const auto& [id, n] : nodes_) twice += n.neighbors.size();
    return twice / 2;
}

std::string ItmMap::audit() const {
    std::ostringstream err;
    if (nodes_.size() < settings_.min_nodes) err << "fewer than " << settings_.min_nodes << " nodes; ";
    for (const auto& [id, n] : nodes_) {
        if (n.id != id) err << "node " << id << " has mismatched id; ";
        if (n.weight.size() != dim_) err << "node " << id << " has wrong weight dim; ";
        for (int m : n.neighbors) {
            if (m == id) err << "self-loop at " << id << "; ";
            auto it = nodes_.find(m);
            if (it == nodes_.end()) {
                err << "dangling edge " << id << "-" << m << "; ";
            } else if (!it->second.neighbors.count(id)) {
                err << "asymmetric edge " << id << "-" << m << "; ";
            }
        }
    }
    return err.str();
}

void ItmMap::save(std::ostream& os) const {
    const auto old_precision = os.precision(17);
    os << "dualsys-itm 1\n";
    os << "dim " << dim_ << " nodes " << nodes_.size() << " e_max " << settings_.e_max << " window "
       << settings_.window << " lag " << settings_.lag << "\n";
    for (const auto& [id, n] : nodes_) {
        os << "node " << id << " weight";
        for (double x : n.weight) os << ' ' << x;
        os << " | neighbors";
        for (int m : n.neighbors) os << ' ' << m;
        os << " | errors";
        for (double e : n.progress.error_window()) os << ' ' << e;
        os << " | means";
        for (double e : n.progress.mean_history()) os << ' ' << e;
        os << " | events " << n.progress.event_count() << "\n";
    }
    os << "end\n";
    os.precision(old_precision);
}

}  // namespace dualsys
