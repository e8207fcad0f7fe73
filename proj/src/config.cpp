#include "dualsys/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <functional>
#include <random>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace dualsys {

std::string to_string(Algo a) {
    switch (a) {
        case Algo::ddpg: return "ddpg";
        case Algo::cacla: return "cacla";
        case Algo::ddpg_im2c: return "ddpg_im2c";
        case Algo::cacla_im2c: return "cacla_im2c";
        case Algo::ddpg_la_imagination: return "ddpg_la_imagination";
        case Algo::ddpg_i2a: return "ddpg_i2a";
    }
    return "ddpg";
}

Algo algo_from_string(const std::string& s) {
    for (Algo a : {Algo::ddpg, Algo::cacla, Algo::ddpg_im2c, Algo::cacla_im2c, Algo::ddpg_la_imagination,
                   Algo::ddpg_i2a})
        if (to_string(a) == s) return a;
    throw std::invalid_argument("unknown algo: " + s);
}

bool uses_map(Algo a) { return a != Algo::ddpg && a != Algo::cacla; }
bool uses_arbitration(Algo a) { return a == Algo::ddpg_im2c || a == Algo::cacla_im2c || a == Algo::ddpg_i2a; }
bool uses_imagination(Algo a) { return a == Algo::ddpg_la_imagination || a == Algo::ddpg_i2a; }
bool uses_cacla(Algo a) { return a == Algo::cacla || a == Algo::cacla_im2c; }

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        const double x = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument("trailing characters");
        return x;
    } catch (const std::exception&) {
        throw std::invalid_argument("config: cannot parse '" + v + "' for " + key);
    }
}

long long parse_int(const std::string& key, const std::string& v) {
    long long x = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (ec != std::errc{} || ptr != v.data() + v.size())
        throw std::invalid_argument("config: cannot parse '" + v + "' for " + key);
    return x;
}

std::size_t parse_size(const std::string& key, const std::string& v) {
    const long long x = parse_int(key, v);
    if (x < 0) throw std::invalid_argument("config: " + key + " must be non-negative");
    return static_cast<std::size_t>(x);
}

std::string fmt(double x) {
    std::ostringstream os;
    os.precision(17);
    os << x;
    return os.str();
}

std::vector<std::size_t> parse_size_list(const std::string& key, const std::string& v) {
    std::vector<std::size_t> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_size(key, trim(item)));
    if (out.empty()) throw std::invalid_argument("config: " + key + " needs at least one entry");
    return out;
}

}  // namespace

void Config::set(const std::string& key_in, const std::string& value_in) {
    const std::string key = trim(key_in);
    const std::string v = trim(value_in);
    using Setter = std::function<void(Config&, const std::string&)>;
    static const std::map<std::string, Setter> setters = {
        {"algo", [](Config& c, const std::string& s) { c.algo = algo_from_string(s); }},
        {"reward", [](Config& c, const std::string& s) { c.env.reward_mode = reward_mode_from_string(s); }},
        {"episodes", [](Config& c, const std::string& s) { c.episodes = static_cast<int>(parse_int("episodes", s)); }},
        {"seed", [](Config& c, const std::string& s) { c.seed = parse_size("seed", s); }},
        {"latent_dim", [](Config& c, const std::string& s) { c.latent_dim = parse_size("latent_dim", s); }},
        {"encoder_hidden", [](Config& c, const std::string& s) { c.encoder_hidden = parse_size("encoder_hidden", s); }},
        {"ac_hidden", [](Config& c, const std::string& s) { c.ac_hidden = parse_size_list("ac_hidden", s); }},
        {"model_hidden", [](Config& c, const std::string& s) { c.model_hidden = parse_size("model_hidden", s); }},
        {"lambda_rec", [](Config& c, const std::string& s) { c.lambda_rec = parse_double("lambda_rec", s); }},
        {"lambda_q", [](Config& c, const std::string& s) { c.lambda_q = parse_double("lambda_q", s); }},
        {"plan_lr", [](Config& c, const std::string& s) { c.plan_lr = parse_double("plan_lr", s); }},
        {"plan_iterations", [](Config& c, const std::string& s) { c.plan_iterations = static_cast<int>(parse_int("plan_iterations", s)); }},
        {"max_depth", [](Config& c, const std::string& s) { c.max_depth = static_cast<int>(parse_int("max_depth", s)); }},
        {"desired_return", [](Config& c, const std::string& s) { c.desired_return = parse_double("desired_return", s); }},
        {"e_max", [](Config& c, const std::string& s) { c.e_max = parse_double("e_max", s); }},
        {"window", [](Config& c, const std::string& s) { c.window = parse_size("window", s); }},
        {"lag", [](Config& c, const std::string& s) { c.lag = parse_size("lag", s); }},
        {"gamma", [](Config& c, const std::string& s) { c.gamma = parse_double("gamma", s); }},
        {"tau", [](Config& c, const std::string& s) { c.tau = parse_double("tau", s); }},
        {"batch", [](Config& c, const std::string& s) { c.batch = parse_size("batch", s); }},
        {"lr_critic", [](Config& c, const std::string& s) { c.lr_critic = parse_double("lr_critic", s); }},
        {"lr_actor", [](Config& c, const std::string& s) { c.lr_actor = parse_double("lr_actor", s); }},
        {"lr_model", [](Config& c, const std::string& s) { c.lr_model = parse_double("lr_model", s); }},
        {"buffer_capacity", [](Config& c, const std::string& s) { c.buffer_capacity = parse_size("buffer_capacity", s); }},
        {"pixel_capacity", [](Config& c, const std::string& s) { c.pixel_capacity = parse_size("pixel_capacity", s); }},
        {"latent_capacity", [](Config& c, const std::string& s) { c.latent_capacity = parse_size("latent_capacity", s); }},
        {"noise_scale", [](Config& c, const std::string& s) { c.noise_scale = parse_double("noise_scale", s); }},
        {"updates_per_step", [](Config& c, const std::string& s) { c.updates_per_step = static_cast<int>(parse_int("updates_per_step", s)); }},
        {"learning_starts", [](Config& c, const std::string& s) { c.learning_starts = parse_size("learning_starts", s); }},
        {"env.grasp_threshold", [](Config& c, const std::string& s) { c.env.grasp_threshold = parse_double("env.grasp_threshold", s); }},
        {"env.topple_radius", [](Config& c, const std::string& s) { c.env.topple_radius = parse_double("env.topple_radius", s); }},
        {"env.max_steps", [](Config& c, const std::string& s) { c.env.max_steps = static_cast<int>(parse_int("env.max_steps", s)); }},
        {"env.workspace", [](Config& c, const std::string& s) { c.env.workspace = parse_double("env.workspace", s); }},
        {"env.gain", [](Config& c, const std::string& s) { c.env.gain = parse_double("env.gain", s); }},
        {"env.home_x", [](Config& c, const std::string& s) { c.env.home_x = parse_double("env.home_x", s); }},
        {"env.home_y", [](Config& c, const std::string& s) { c.env.home_y = parse_double("env.home_y", s); }},
        {"env.target_min_radius", [](Config& c, const std::string& s) { c.env.target_min_radius = parse_double("env.target_min_radius", s); }},
        {"env.target_max_radius", [](Config& c, const std::string& s) { c.env.target_max_radius = parse_double("env.target_max_radius", s); }},
        {"env.reward_mode", [](Config& c, const std::string& s) { c.env.reward_mode = reward_mode_from_string(s); }},
        {"env.observation_mode", [](Config& c, const std::string& s) { c.env.observation_mode = observation_mode_from_string(s); }},
        {"env.image_size", [](Config& c, const std::string& s) { c.env.image_size = parse_size("env.image_size", s); }},
        {"env.render_seed", [](Config& c, const std::string& s) { c.env.render_seed = parse_size("env.render_seed", s); }},
    };
    auto it = setters.find(key);
    if (it == setters.end()) throw std::invalid_argument("config: unknown key '" + key + "'");
    it->second(*this, v);
}

std::map<std::string, std::string> Config::to_map() const {
    std::map<std::string, std::string> m;
    m["algo"] = to_string(algo);
    m["episodes"] = std::to_string(episodes);
    m["seed"] = std::to_string(seed);
    m["latent_dim"] = std::to_string(latent_dim);
    m["encoder_hidden"] = std::to_string(encoder_hidden);
    std::string hidden;
    for (std::size_t i = 0; i < ac_hidden.size(); ++i) hidden += (i ? "," : "") + std::to_string(ac_hidden[i]);
    m["ac_hidden"] = hidden;
    m["model_hidden"] = std::to_string(model_hidden);
    m["lambda_rec"] = fmt(lambda_rec);
    m["lambda_q"] = fmt(lambda_q);
    m["plan_lr"] = fmt(plan_lr);
    m["plan_iterations"] = std::to_string(plan_iterations);
    m["max_depth"] = std::to_string(max_depth);
    m["desired_return"] = fmt(desired_return);
    m["e_max"] = fmt(e_max);
    m["window"] = std::to_string(window);
    m["lag"] = std::to_string(lag);
    m["gamma"] = fmt(gamma);
    m["tau"] = fmt(tau);
    m["batch"] = std::to_string(batch);
    m["lr_critic"] = fmt(lr_critic);
    m["lr_actor"] = fmt(lr_actor);
    m["lr_model"] = fmt(lr_model);
    m["buffer_capacity"] = std::to_string(buffer_capacity);
    m["pixel_capacity"] = std::to_string(pixel_capacity);
    m["latent_capacity"] = std::to_string(latent_capacity);
    m["noise_scale"] = fmt(noise_scale);
    m["updates_per_step"] = std::to_string(updates_per_step);
    m["learning_starts"] = std::to_string(learning_starts);
    m["env.grasp_threshold"] = fmt(env.grasp_threshold);
    m["env.topple_radius"] = fmt(env.topple_radius);
    m["env.max_steps"] = std::to_string(env.max_steps);
    m["env.workspace"] = fmt(env.workspace);
    m["env.gain"] = fmt(env.gain);
    m["env.home_x"] = fmt(env.home_x);
    m["env.home_y"] = fmt(env.home_y);
    m["env.target_min_radius"] = fmt(env.target_min_radius);
    m["env.target_max_radius"] = fmt(env.target_max_radius);
    m["env.reward_mode"] = to_string(env.reward_mode);
    m["env.observation_mode"] = to_string(env.observation_mode);
    m["env.image_size"] = std::to_string(env.image_size);
    m["env.render_seed"] = std::to_string(env.render_seed);
    return m;
}

void Config::validate() const {
    env.validate();
    if (episodes < 0) throw std::invalid_argument("config: episodes must be >= 0");
    if (latent_dim == 0 || encoder_hidden == 0 || model_hidden == 0 || ac_hidden.empty())
        throw std::invalid_argument("config: network sizes must be positive");
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw std::invalid_argument("config: gamma must lie in [0, 1]");
    if (!(tau >= 0.0 && tau <= 1.0)) throw std::invalid_argument("config: tau must lie in [0, 1]");
    if (batch == 0) throw std::invalid_argument("config: batch must be positive");
    if (max_depth < 1 || plan_iterations < 0) throw std::invalid_argument("config: bad planner settings");
    if (window == 0) throw std::invalid_argument("config: window must be positive");
    if (noise_scale < 0.0) throw std::invalid_argument("config: noise_scale must be >= 0");
    if (updates_per_step < 0) throw std::invalid_argument("config: updates_per_step must be >= 0");
    if (buffer_capacity == 0 || pixel_capacity == 0 || latent_capacity == 0)
        throw std::invalid_argument("config: buffer capacities must be positive");
}

void apply_config_text(Config& config, std::istream& is) {
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected key = value");
        config.set(line.substr(0, eq), line.substr(eq + 1));
    }
}

void apply_config_file(Config& config, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file " + path);
    apply_config_text(config, in);
}

void apply_environment_overrides(Config& config, char** envp) {
    if (!envp) return;
    const std::string prefix = "DUALSYS_";
    std::map<std::string, std::string> by_env_name;
    for (const auto& [key, value] : config.to_map()) {
        std::string name = key;
        for (auto& ch : name) ch = ch == '.' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
        by_env_name[prefix + name] = key;
    }
    by_env_name[prefix + "REWARD"] = "reward";
    for (char** e = envp; *e; ++e) {
        const std::string entry(*e);
        const auto eq = entry.find('=');
        if (eq == std::string::npos) continue;
        auto it = by_env_name.find(entry.substr(0, eq));
        if (it != by_env_name.end()) config.set(it->second, entry.substr(eq + 1));
    }
}

void write_config(std::ostream& os, const Config& config) {
    for (const auto& [k, v] : config.to_map()) os << k << " = " << v << "\n";
}

Rng seeded_stream(std::uint64_t seed, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream)};
    return Rng(seq);
}

}  // namespace dualsys
