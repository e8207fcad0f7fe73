#include "dualsys/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace dualsys {

Experiment::Experiment(const Config& config)
    : config_(config), env_(config.env), env_rng_(seeded_stream(config.seed, 0)), agent_(config, env_.observation_dim()) {}

EpisodeRecord Experiment::run_episode(std::ostream* log) {
    EpisodeRecord rec;
    rec.episode = episode_;
    Observation s = env_.reset(env_rng_);
    EpisodeLog elog;
    elog.episode = episode_;
    elog.target = env_.state().target;

    double err_sum = 0.0;
    int err_count = 0;
    bool done = false;
    while (!done) {
        const ActionChoice choice = agent_.select_action(s);
        const StepResult res = env_.step(choice.action);
        const bool terminal = res.outcome == Outcome::grasped || res.outcome == Outcome::toppled;
        const StepOutcome out = agent_.train_step(choice, s, res.reward, res.obs, terminal);

        rec.reward += res.reward;
        rec.steps += 1;
        (out.decision.kind == DecisionKind::model_based ? rec.mb : rec.mf) += 1;
        rec.imagined += out.imagined_count;
        if (out.model_error) {
            err_sum += *out.model_error;
            ++err_count;
        }
        if (log) elog.steps.push_back(EpisodeStep{rec.steps, choice.action, res.reward, res.outcome});
        s = res.obs;
        done = res.done;
    }
    rec.model_err = err_count ? err_sum / err_count : 0.0;
    rec.nodes = agent_.map() ? agent_.map()->size() : 0;
    if (log) write_episode_log(*log, elog);
    ++episode_;
    return rec;
}

std::vector<EpisodeRecord> run_experiment(const Config& config,
                                          const std::function<void(const EpisodeRecord&)>& on_episode,
                                          std::ostream* episode_log) {
    config.validate();
    Experiment exp(config);
    std::vector<EpisodeRecord> out;
    out.reserve(static_cast<std::size_t>(config.episodes));
    for (int e = 0; e < config.episodes; ++e) {
        out.push_back(exp.run_episode(episode_log));
        if (on_episode) on_episode(out.back());
    }
    return out;
}

double evaluate_success(const Agent& agent, const Network& encoder, const EnvConfig& env_config, int episodes,
                        std::uint64_t seed) {
    if (episodes <= 0) throw std::invalid_argument("evaluate_success: episodes must be positive");
    GraspEnv env(env_config);
    Rng rng = seeded_stream(seed, 0);
    int successes = 0;
    for (int e = 0; e < episodes; ++e) {
        Observation s = env.reset(rng);
        while (true) {
            const StepResult res = env.step(agent.actor_critic().act(encoder.forward(s.values)));
            if (res.done) {
                successes += res.outcome == Outcome::grasped;
                break;
            }
            s = res.obs;
        }
    }
    return static_cast<double>(successes) / episodes;
}

std::vector<double> episode_rewards(std::span<const EpisodeRecord> records) {
    std::vector<double> r;
    r.reserve(records.size());
    for (const auto& rec : records) r.push_back(rec.reward);
    return r;
}

double compute_auc(std::span<const double> rewards) {
    if (rewards.empty()) throw std::invalid_argument("compute_auc: no episodes");
    return std::accumulate(rewards.begin(), rewards.end(), 0.0) / static_cast<double>(rewards.size()) / 1.0;
}

double compute_auc(std::span<const EpisodeRecord> records) {
    const auto r = episode_rewards(records);
    return compute_auc(r);
}

std::pair<double, double> compute_final_perf(std::span<const double> rewards, std::size_t n) {
    if (n == 0) throw std::invalid_argument("compute_final_perf: n must be positive");
    if (rewards.size() < n) throw std::invalid_argument("compute_final_perf: fewer records than n");
    const auto tail = rewards.subspan(rewards.size() - n);
    const double mean = std::accumulate(tail.begin(), tail.end(), 0.0) / static_cast<double>(n);
    double var = 0.0;
    for (double x : tail) var += (x - mean) * (x - mean);
    return {mean, std::sqrt(var / static_cast<double>(n))};
}

std::pair<double, double> compute_final_perf(std::span<const EpisodeRecord> records, std::size_t n) {
    const auto r = episode_rewards(records);
    return compute_final_perf(r, n);
}

std::vector<double> smooth(std::span<const double> values, std::size_t window) {
    if (window == 0) throw std::invalid_argument("smooth: window must be >= 1");
    const std::size_t n = values.size();
    const std::size_t left = (window - 1) / 2, right = window / 2;
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t lo = i >= left ? i - left : 0;
        const std::size_t hi = std::min(n, i + right + 1);
        double s = 0.0;
        for (std::size_t k = lo; k < hi; ++k) s += values[k];
        out[i] = s / static_cast<double>(hi - lo);
    }
    return out;
}

// ------------------------------------------------------------------- CSV

namespace {

std::string fmt17(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

}  // namespace

void write_csv(std::ostream& os, std::span<const EpisodeRecord> records) {
    os << csv_header << "\n";
    for (const auto& r : records) {
        os << r.episode << ',' << fmt17(r.reward) << ',' << r.steps << ',' << r.mf << ',' << r.mb << ','
           << fmt17(r.model_err) << ',' << r.nodes << ',' << r.imagined << "\n";
    }
}

std::vector<EpisodeRecord> read_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw std::runtime_error("csv: missing header");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != csv_header) throw std::runtime_error("csv: unexpected header: " + line);
    std::vector<EpisodeRecord> out;
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) f.push_back(cell);
        if (f.size() != 8) throw std::runtime_error("csv: expected 8 fields: " + line);
        try {
            EpisodeRecord r;
            r.episode = std::stoi(f[0]);
            r.reward = std::stod(f[1]);
            r.steps = std::stoi(f[2]);
            r.mf = std::stoi(f[3]);
            r.mb = std::stoi(f[4]);
            r.model_err = std::stod(f[5]);
            r.nodes = std::stoull(f[6]);
            r.imagined = std::stoull(f[7]);
            out.push_back(r);
        } catch (const std::logic_error&) {
            throw std::runtime_error("csv: bad record: " + line);
        }
    }
    return out;
}

void emit_csv(std::span<const EpisodeRecord> records, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    write_csv(out, records);
    out.flush();
    if (!out) throw std::runtime_error("write failed: " + path);
}

std::vector<EpisodeRecord> parse_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path);
    return read_csv(in);
}

// ------------------------------------------------------------------ plots

Curve aggregate_curve(const std::string& label, const std::vector<std::vector<double>>& per_seed,
                      std::size_t window) {
    Curve c;
    c.label = label;
    if (per_seed.empty()) return c;
    std::size_t len = per_seed.front().size();
    for (const auto& s : per_seed) len = std::min(len, s.size());
    std::vector<std::vector<double>> smoothed;
    for (const auto& s : per_seed) smoothed.push_back(smooth(std::span<const double>(s.data(), len), window));
    const double k = static_cast<double>(smoothed.size());
    c.mean.assign(len, 0.0);
    c.band.assign(len, 0.0);
    for (std::size_t i = 0; i < len; ++i) {
        double m = 0.0;
        for (const auto& s : smoothed) m += s[i];
        m /= k;
        double v = 0.0;
        for (const auto& s : smoothed) v += (s[i] - m) * (s[i] - m);
        c.mean[i] = m;
        c.band[i] = std::sqrt(v / k);
    }
    return c;
}

void write_svg(std::ostream& os, std::span<const Curve> curves, const std::string& title) {
    static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};
    const double W = 800, H = 450, ml = 60, mr = 170, mt = 40, mb = 50;
    const double pw = W - ml - mr, ph = H - mt - mb;

    std::size_t len = 0;
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& c : curves) {
        len = std::max(len, c.mean.size());
        for (std::size_t i = 0; i < c.mean.size(); ++i) {
            const double b = i < c.band.size() ? c.band[i] : 0.0;
            lo = std::min(lo, c.mean[i] - b);
            hi = std::max(hi, c.mean[i] + b);
        }
    }
    if (!std::isfinite(lo)) lo = 0.0, hi = 1.0;
    if (hi - lo < 1e-9) lo -= 0.5, hi += 0.5;
    const double xmax = len > 1 ? static_cast<double>(len - 1) : 1.0;
    auto X = [&](double i) { return ml + pw * i / xmax; };
    auto Y = [&](double v) { return mt + ph * (1.0 - (v - lo) / (hi - lo)); };

    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 "
       << W << ' ' << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    if (!title.empty()) os << "<text x=\"" << ml << "\" y=\"24\" font-size=\"15\">" << title << "</text>\n";
    os << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << pw << "\" height=\"" << ph
       << "\" fill=\"none\" stroke=\"#444\"/>\n";
    for (int t = 0; t <= 4; ++t) {
        const double v = lo + (hi - lo) * t / 4.0;
        os << "<line x1=\"" << ml - 4 << "\" x2=\"" << ml << "\" y1=\"" << Y(v) << "\" y2=\"" << Y(v)
           << "\" stroke=\"#444\"/><text x=\"" << ml - 8 << "\" y=\"" << Y(v) + 4 << "\" text-anchor=\"end\">"
           << fmt17(std::round(v * 1000.0) / 1000.0) << "</text>\n";
        const double e = xmax * t / 4.0;
        os << "<line x1=\"" << X(e) << "\" x2=\"" << X(e) << "\" y1=\"" << mt + ph << "\" y2=\"" << mt + ph + 4
           << "\" stroke=\"#444\"/><text x=\"" << X(e) << "\" y=\"" << mt + ph + 18 << "\" text-anchor=\"middle\">"
           << static_cast<long>(std::round(e)) << "</text>\n";
    }
    os << "<text x=\"" << ml + pw / 2 << "\" y=\"" << H - 10 << "\" text-anchor=\"middle\">episode</text>\n";
    os << "<text x=\"16\" y=\"" << mt + ph / 2 << "\" transform=\"rotate(-90 16 " << mt + ph / 2
       << ")\" text-anchor=\"middle\">episodic reward</text>\n";

    for (std::size_t k = 0; k < curves.size(); ++k) {
        const Curve& c = curves[k];
        const char* color = palette[k % 6];
        if (c.mean.empty()) continue;
        os << "<polygon fill=\"" << color << "\" fill-opacity=\"0.2\" stroke=\"none\" points=\"";
        for (std::size_t i = 0; i < c.mean.size(); ++i)
            os << X(static_cast<double>(i)) << ',' << Y(c.mean[i] + (i < c.band.size() ? c.band[i] : 0.0)) << ' ';
        for (std::size_t i = c.mean.size(); i-- > 0;)
            os << X(static_cast<double>(i)) << ',' << Y(c.mean[i] - (i < c.band.size() ? c.band[i] : 0.0)) << ' ';
        os << "\"/>\n<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < c.mean.size(); ++i) os << X(static_cast<double>(i)) << ',' << Y(c.mean[i]) << ' ';
        os << "\"/>\n";
        const double ly = mt + 16.0 + 18.0 * static_cast<double>(k);
        os << "<line x1=\"" << ml + pw + 12 << "\" x2=\"" << ml + pw + 32 << "\" y1=\"" << ly - 4 << "\" y2=\""
           << ly - 4 << "\" stroke=\"" << color << "\" stroke-width=\"3\"/><text x=\"" << ml + pw + 38 << "\" y=\""
           << ly << "\">" << c.label << "</text>\n";
    }
    os << "</svg>\n";
}

void emit_plot(std::span<const Curve> curves, const std::string& path, const std::string& title) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    write_svg(out, curves, title);
    out.flush();
    if (!out) throw std::runtime_error("write failed: " + path);
}

std::string run_file_name(const Config& config) {
    return to_string(config.algo) + "-" + to_string(config.env.reward_mode) + "-seed" + std::to_string(config.seed) +
           ".csv";
}

}  // namespace dualsys
