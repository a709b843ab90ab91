#include "bitflow/config.hpp"

#include "bitflow/errors.hpp"

#include <algorithm>
#include <cctype>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace bitflow {

std::string to_string(ExperimentKind kind) {
    switch (kind) {
        case ExperimentKind::Verify: return "verify";
        case ExperimentKind::Train: return "train";
        case ExperimentKind::SweepEps: return "sweep-eps";
        case ExperimentKind::SweepWidth: return "sweep-width";
        case ExperimentKind::GradCheck: return "gradcheck";
    }
    return "verify";
}

ExperimentKind experiment_kind_from_string(const std::string& s) {
    if (s == "verify") return ExperimentKind::Verify;
    if (s == "train") return ExperimentKind::Train;
    if (s == "sweep-eps") return ExperimentKind::SweepEps;
    if (s == "sweep-width") return ExperimentKind::SweepWidth;
    if (s == "gradcheck") return ExperimentKind::GradCheck;
    throw ConfigError("unknown experiment kind: " + s);
}

namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(trim(cur));
    return out;
}

double parse_double(const std::string& v, int line) {
    std::size_t pos = 0;
    double d;
    try {
        d = std::stod(v, &pos);
    } catch (const std::exception&) {
        throw ConfigError("expected a number, got '" + v + "'", line, 1);
    }
    if (pos != v.size()) throw ConfigError("trailing characters in number '" + v + "'", line, 1);
    return d;
}

std::int64_t parse_int(const std::string& v, int line) {
    std::size_t pos = 0;
    std::int64_t i;
    try {
        i = std::stoll(v, &pos);
    } catch (const std::exception&) {
        throw ConfigError("expected an integer, got '" + v + "'", line, 1);
    }
    if (pos != v.size()) throw ConfigError("trailing characters in integer '" + v + "'", line, 1);
    return i;
}

std::uint64_t parse_uint(const std::string& v, int line) {
    std::size_t pos = 0;
    std::uint64_t i;
    try {
        i = std::stoull(v, &pos);
    } catch (const std::exception&) {
        throw ConfigError("expected an unsigned integer, got '" + v + "'", line, 1);
    }
    if (pos != v.size()) throw ConfigError("trailing characters in integer '" + v + "'", line, 1);
    return i;
}

ActivationKind activation_from_string(const std::string& s, int line) {
    if (s == "tanh") return ActivationKind::Tanh;
    if (s == "identity") return ActivationKind::Identity;
    throw ConfigError("R3: unknown activation '" + s + "' (tanh | identity)", line, 1);
}

std::string activation_to_string(ActivationKind k) {
    return k == ActivationKind::Tanh ? "tanh" : "identity";
}

std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace

Architecture ExperimentConfig::architecture() const {
    Architecture a;
    for (std::size_t l = 0; l < dims.size(); ++l)
        a.layers.push_back({dims[l].first, dims[l].second, activations[l]});
    a.validate();
    return a;
}

SmoothingParams ExperimentConfig::smoothing() const {
    return SmoothingParams::create(epsilon, bits, delta, clip_variant);
}

RunConfig ExperimentConfig::run_config() const {
    RunConfig rc;
    rc.eta = eta;
    rc.horizon = horizon;
    rc.clamp = clamp;
    rc.init_scale = init_scale;
    rc.seed = seed;
    rc.stride = stride;
    rc.validate();
    return rc;
}

std::vector<double> ExperimentConfig::comparison_times() const {
    if (!times.empty()) return times;
    return {0.0, horizon / 4.0, horizon / 2.0, 3.0 * horizon / 4.0, horizon};
}

void ExperimentConfig::validate() const {
    if (dims.empty()) throw ConfigError("architecture: dims must not be empty");
    if (activations.size() != dims.size())
        throw ConfigError("architecture: one activation per layer required");
    for (std::size_t l = 0; l < dims.size(); ++l) {
        if (dims[l].first <= 0 || dims[l].second <= 0)
            throw ConfigError("architecture: dimensions must be positive");
        if (l > 0 && dims[l].first != dims[l - 1].second)
            throw ConfigError("architecture: fan-in of layer " + std::to_string(l + 1) +
                              " must equal width of layer " + std::to_string(l));
    }
    if (!(epsilon > 0.0 && epsilon <= 1.0))
        throw ConfigError("R5: epsilon must lie in (0,1]");
    for (double e : epsilon_list)
        if (!(e > 0.0 && e <= 1.0))
            throw ConfigError("R5: every epsilon_list entry must lie in (0,1]");
    for (std::size_t i = 1; i < epsilon_list.size(); ++i)
        if (epsilon_list[i] > epsilon_list[i - 1])
            throw ConfigError("R5: epsilon_list must be non-increasing");
    if (bits < 1) throw ConfigError("R5: bits must be a positive integer");
    if (!(delta > 0.0 && delta < 1.0))
        throw ConfigError("R5: delta must lie in (0,1)");
    if (!(eta > 0.0)) throw ConfigError("dynamics: eta must be positive");
    if (!(horizon >= 0.0)) throw ConfigError("dynamics: horizon must be nonnegative");
    if (!(clamp > 0.0)) throw ConfigError("R4: clamp M_star must be positive");
    if (!(init_scale >= 0.0 && init_scale <= clamp))
        throw ConfigError("R4: init scale M must lie in [0, M_star]");
    if (stride < 1) throw ConfigError("dynamics: stride must be >= 1");
    if (samples < 1) throw ConfigError("R1: sample count must be >= 1");
    if (!(support >= 0.0) || !std::isfinite(support))
        throw ConfigError("R1: support bound R must be finite and nonnegative");
    if (target_rule != "teacher" && target_rule != "zero" &&
        target_rule != "linear" && target_rule != "sinsum")
        throw ConfigError("data: unknown target rule '" + target_rule + "'");
    for (std::size_t i = 1; i < widths.size(); ++i)
        if (widths[i] < widths[i - 1])
            throw ConfigError("experiment: widths must be non-decreasing");
    for (int w : widths)
        if (w < 1) throw ConfigError("experiment: widths must be positive");
    if (kind == ExperimentKind::SweepEps && epsilon_list.empty())
        throw ConfigError("sweep-eps: epsilon_list must be provided");
    if (kind == ExperimentKind::SweepWidth && widths.empty())
        throw ConfigError("sweep-width: widths must be provided");
}

namespace {

struct RawEntry {
    std::string value;
    int line;
};

using Section = std::map<std::string, RawEntry>;

std::map<std::string, Section> parse_sections(const std::string& text) {
    std::map<std::string, Section> sections;
    std::istringstream in(text);
    std::string raw;
    std::string current;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const std::string line = trim(raw);
        if (line.empty() || line[0] == '#' || line[0] == ';') continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("unterminated section header",
                                  line_no, static_cast<int>(raw.size()));
            current = trim(line.substr(1, line.size() - 2));
            if (current.empty()) throw ConfigError("empty section name", line_no, 1);
            sections[current];
            continue;
        }
        const std::size_t eq = raw.find('=');
        if (eq == std::string::npos)
            throw ConfigError("expected 'key = value'", line_no, 1);
        if (current.empty())
            throw ConfigError("key outside of any [section]", line_no, 1);
        const std::string key = trim(raw.substr(0, eq));
        if (key.empty())
            throw ConfigError("empty key", line_no, static_cast<int>(eq) + 1);
        if (sections[current].count(key))
            throw ConfigError("duplicate key '" + key + "'", line_no, 1);
        sections[current][key] = {trim(raw.substr(eq + 1)), line_no};
    }
    return sections;
}

const std::set<std::string> kSections = {"architecture", "smoothing", "dynamics",
                                         "data", "experiment"};
const std::map<std::string, std::set<std::string>> kKeys = {
    {"architecture", {"depth", "dims", "activation"}},
    {"smoothing", {"epsilon", "epsilon_list", "bits", "delta", "clip_variant"}},
    {"dynamics", {"eta", "horizon", "clamp", "init_scale", "seed", "stride"}},
    {"data", {"samples", "support", "target"}},
    {"experiment", {"kind", "widths", "times"}},
};

} // namespace

ExperimentConfig parse_config(const std::string& text) {
    const auto sections = parse_sections(text);
    for (const auto& [name, body] : sections) {
        if (!kSections.count(name))
            throw ConfigError("unknown section [" + name + "]");
        const auto& allowed = kKeys.at(name);
        for (const auto& [key, entry] : body)
            if (!allowed.count(key))
                throw ConfigError("unknown key '" + key + "' in [" + name + "]",
                                  entry.line, 1);
    }

    ExperimentConfig cfg;
    auto get = [&](const std::string& s, const std::string& k) -> const RawEntry* {
        auto sit = sections.find(s);
        if (sit == sections.end()) return nullptr;
        auto kit = sit->second.find(k);
        return kit == sit->second.end() ? nullptr : &kit->second;
    };

    int declared_depth = -1;
    if (const RawEntry* e = get("architecture", "depth"))
        declared_depth = static_cast<int>(parse_int(e->value, e->line));
    if (const RawEntry* e = get("architecture", "dims")) {
        cfg.dims.clear();
        for (const std::string& item : split(e->value, ',')) {
            const std::size_t x = item.find('x');
            if (x == std::string::npos)
                throw ConfigError("dims entries must look like <fan_in>x<width>", e->line, 1);
            cfg.dims.emplace_back(
                static_cast<int>(parse_int(trim(item.substr(0, x)), e->line)),
                static_cast<int>(parse_int(trim(item.substr(x + 1)), e->line)));
        }
    }
    if (declared_depth >= 0 && declared_depth != static_cast<int>(cfg.dims.size()))
        throw ConfigError("architecture: depth does not match dims length");
    if (const RawEntry* e = get("architecture", "activation")) {
        const auto items = split(e->value, ',');
        cfg.activations.clear();
        if (items.size() == 1) {
            cfg.activations.assign(cfg.dims.size(),
                                   activation_from_string(items[0], e->line));
            // A single hidden kind keeps the identity readout.
            if (cfg.dims.size() > 1 && items[0] == "tanh")
                cfg.activations.back() = ActivationKind::Identity;
        } else {
            for (const std::string& item : items)
                cfg.activations.push_back(activation_from_string(item, e->line));
        }
    } else if (cfg.dims.size() != cfg.activations.size()) {
        cfg.activations.assign(cfg.dims.size(), ActivationKind::Tanh);
        cfg.activations.back() = ActivationKind::Identity;
    }

    if (const RawEntry* e = get("smoothing", "epsilon"))
        cfg.epsilon = parse_double(e->value, e->line);
    if (const RawEntry* e = get("smoothing", "epsilon_list")) {
        cfg.epsilon_list.clear();
        for (const std::string& item : split(e->value, ','))
            cfg.epsilon_list.push_back(parse_double(item, e->line));
    }
    if (const RawEntry* e = get("smoothing", "bits"))
        cfg.bits = static_cast<int>(parse_int(e->value, e->line));
    if (const RawEntry* e = get("smoothing", "delta"))
        cfg.delta = parse_double(e->value, e->line);
    if (const RawEntry* e = get("smoothing", "clip_variant")) {
        if (e->value == "logistic") cfg.clip_variant = ClipVariant::Logistic;
        else if (e->value == "interior") cfg.clip_variant = ClipVariant::Interior;
        else throw ConfigError("unknown clip_variant '" + e->value + "'", e->line, 1);
    }

    if (const RawEntry* e = get("dynamics", "eta")) cfg.eta = parse_double(e->value, e->line);
    if (const RawEntry* e = get("dynamics", "horizon"))
        cfg.horizon = parse_double(e->value, e->line);
    if (const RawEntry* e = get("dynamics", "clamp"))
        cfg.clamp = parse_double(e->value, e->line);
    if (const RawEntry* e = get("dynamics", "init_scale"))
        cfg.init_scale = parse_double(e->value, e->line);
    if (const RawEntry* e = get("dynamics", "seed")) cfg.seed = parse_uint(e->value, e->line);
    if (const RawEntry* e = get("dynamics", "stride"))
        cfg.stride = static_cast<int>(parse_int(e->value, e->line));

    if (const RawEntry* e = get("data", "samples"))
        cfg.samples = static_cast<int>(parse_int(e->value, e->line));
    if (const RawEntry* e = get("data", "support"))
        cfg.support = parse_double(e->value, e->line);
    if (const RawEntry* e = get("data", "target")) cfg.target_rule = e->value;

    if (const RawEntry* e = get("experiment", "kind"))
        cfg.kind = experiment_kind_from_string(e->value);
    if (const RawEntry* e = get("experiment", "widths")) {
        cfg.widths.clear();
        for (const std::string& item : split(e->value, ','))
            cfg.widths.push_back(static_cast<int>(parse_int(item, e->line)));
    }
    if (const RawEntry* e = get("experiment", "times")) {
        cfg.times.clear();
        for (const std::string& item : split(e->value, ','))
            cfg.times.push_back(parse_double(item, e->line));
    }

    cfg.validate();
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

std::string canonical_text(const ExperimentConfig& cfg) {
    std::ostringstream out;
    out << "[architecture]\n";
    {
        std::ostringstream acts, dims;
        for (std::size_t l = 0; l < cfg.dims.size(); ++l) {
            if (l) {
                acts << ",";
                dims << ",";
            }
            acts << activation_to_string(cfg.activations[l]);
            dims << cfg.dims[l].first << "x" << cfg.dims[l].second;
        }
        out << "activation = " << acts.str() << "\n";
        out << "depth = " << cfg.dims.size() << "\n";
        out << "dims = " << dims.str() << "\n";
    }
    out << "[data]\n";
    out << "samples = " << cfg.samples << "\n";
    out << "support = " << fmt17(cfg.support) << "\n";
    out << "target = " << cfg.target_rule << "\n";
    out << "[dynamics]\n";
    out << "clamp = " << fmt17(cfg.clamp) << "\n";
    out << "eta = " << fmt17(cfg.eta) << "\n";
    out << "horizon = " << fmt17(cfg.horizon) << "\n";
    out << "init_scale = " << fmt17(cfg.init_scale) << "\n";
    out << "seed = " << cfg.seed << "\n";
    out << "stride = " << cfg.stride << "\n";
    out << "[experiment]\n";
    out << "kind = " << to_string(cfg.kind) << "\n";
    {
        std::ostringstream times, widths;
        for (std::size_t i = 0; i < cfg.times.size(); ++i) {
            if (i) times << ",";
            times << fmt17(cfg.times[i]);
        }
        for (std::size_t i = 0; i < cfg.widths.size(); ++i) {
            if (i) widths << ",";
            widths << cfg.widths[i];
        }
        out << "times = " << times.str() << "\n";
        out << "widths = " << widths.str() << "\n";
    }
    out << "[smoothing]\n";
    out << "bits = " << cfg.bits << "\n";
    out << "clip_variant = "
        << (cfg.clip_variant == ClipVariant::Logistic ? "logistic" : "interior") << "\n";
    out << "delta = " << fmt17(cfg.delta) << "\n";
    out << "epsilon = " << fmt17(cfg.epsilon) << "\n";
    {
        std::ostringstream eps;
        for (std::size_t i = 0; i < cfg.epsilon_list.size(); ++i) {
            if (i) eps << ",";
            eps << fmt17(cfg.epsilon_list[i]);
        }
        out << "epsilon_list = " << eps.str() << "\n";
    }
    return out.str();
}

std::string config_hash(const ExperimentConfig& cfg) {
    const std::string text = canonical_text(cfg);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016" PRIx64, h);
    return buf;
}

} // namespace bitflow
