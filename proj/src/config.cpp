#include "iml/config.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "iml/errors.hpp"

namespace iml {

namespace {

std::string trim(const std::string& s) {
    size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

[[noreturn]] void bad_line(int line, const std::string& what) {
    throw input_error("config line " + std::to_string(line) + ": " + what);
}

bool valid_key(const std::string& k) {
    if (k.empty()) return false;
    for (const char c : k)
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_')) return false;
    return true;
}

double parse_number(const std::string& s, int line) {
    const char* begin = s.c_str();
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end == begin || *end != '\0') bad_line(line, "not a number: '" + s + "'");
    return v;
}

ConfigValue parse_value(const std::string& raw, int line) {
    ConfigValue v;
    if (raw.empty()) bad_line(line, "missing value");
    if (raw.front() == '"') {
        if (raw.size() < 2 || raw.back() != '"')
            bad_line(line, "unterminated string");
        const std::string body = raw.substr(1, raw.size() - 2);
        if (body.find('"') != std::string::npos)
            bad_line(line, "embedded quotes are not supported");
        v.kind = ConfigValue::Kind::string;
        v.str = body;
        return v;
    }
    if (raw == "true" || raw == "false") {
        v.kind = ConfigValue::Kind::boolean;
        v.flag = raw == "true";
        return v;
    }
    if (raw.front() == '[') {
        if (raw.back() != ']') bad_line(line, "unterminated array");
        v.kind = ConfigValue::Kind::array;
        const std::string body = trim(raw.substr(1, raw.size() - 2));
        if (!body.empty()) {
            std::stringstream ss(body);
            std::string item;
            while (std::getline(ss, item, ','))
                v.arr.push_back(parse_number(trim(item), line));
        }
        return v;
    }
    v.kind = ConfigValue::Kind::number;
    v.num = parse_number(raw, line);
    return v;
}

// strips a trailing comment that starts outside any string literal
std::string strip_comment(const std::string& s) {
    bool in_str = false;
    for (size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '"') in_str = !in_str;
        if (s[i] == '#' && !in_str) return s.substr(0, i);
    }
    return s;
}

std::string fmt_num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

int require_dim(const ConfigDoc& doc) {
    const double d = require_num(doc, "domain.d");
    if (d != 1.0 && d != 2.0 && d != 3.0)
        throw input_error("config: domain.d must be 1, 2, or 3");
    return int(d);
}

Vec vec_of(const std::vector<double>& a) {
    Vec v(long(a.size()));
    for (size_t i = 0; i < a.size(); ++i) v[long(i)] = a[i];
    return v;
}

}  // namespace

ConfigDoc parse_config_text(const std::string& text) {
    ConfigDoc doc;
    std::string section;
    std::stringstream in(text);
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        const std::string s = trim(strip_comment(raw));
        if (s.empty()) continue;
        if (s.front() == '[') {
            if (s.back() != ']') bad_line(line, "unterminated section header");
            section = trim(s.substr(1, s.size() - 2));
            if (!valid_key(section)) bad_line(line, "bad section name");
            continue;
        }
        const size_t eq = s.find('=');
        if (eq == std::string::npos) bad_line(line, "expected key = value");
        const std::string key = trim(s.substr(0, eq));
        if (!valid_key(key)) bad_line(line, "bad key name '" + key + "'");
        const std::string full = section.empty() ? key : section + "." + key;
        if (doc.count(full)) bad_line(line, "duplicate key '" + full + "'");
        doc[full] = parse_value(trim(s.substr(eq + 1)), line);
    }
    return doc;
}

ConfigDoc parse_config_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw input_error("config: cannot read '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

std::string canonical_config(const ConfigDoc& doc) {
    std::string out;
    for (const auto& [key, v] : doc) {
        out += key;
        out += '=';
        switch (v.kind) {
            case ConfigValue::Kind::string: out += '"' + v.str + '"'; break;
            case ConfigValue::Kind::boolean: out += v.flag ? "true" : "false"; break;
            case ConfigValue::Kind::number: out += fmt_num(v.num); break;
            case ConfigValue::Kind::array: {
                out += '[';
                for (size_t i = 0; i < v.arr.size(); ++i) {
                    if (i) out += ',';
                    out += fmt_num(v.arr[i]);
                }
                out += ']';
                break;
            }
        }
        out += '\n';
    }
    return out;
}

std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 14695981039346656037ull;
    for (const char c : bytes) {
        h ^= std::uint64_t(static_cast<unsigned char>(c));
        h *= 1099511628211ull;
    }
    return h;
}

std::string config_hash12(const ConfigDoc& doc) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(fnv1a64(canonical_config(doc))));
    return std::string(buf).substr(0, 12);
}

bool has_key(const ConfigDoc& doc, const std::string& key) { return doc.count(key) > 0; }

namespace {
const ConfigValue& require_key(const ConfigDoc& doc, const std::string& key,
                               ConfigValue::Kind kind, const char* kind_name) {
    const auto it = doc.find(key);
    if (it == doc.end()) throw input_error("config: missing key '" + key + "'");
    if (it->second.kind != kind)
        throw input_error("config: key '" + key + "' must be a " + kind_name);
    return it->second;
}
}  // namespace

double require_num(const ConfigDoc& doc, const std::string& key) {
    return require_key(doc, key, ConfigValue::Kind::number, "number").num;
}

double num_or(const ConfigDoc& doc, const std::string& key, double fallback) {
    return has_key(doc, key) ? require_num(doc, key) : fallback;
}

std::string require_str(const ConfigDoc& doc, const std::string& key) {
    return require_key(doc, key, ConfigValue::Kind::string, "string").str;
}

std::vector<double> require_arr(const ConfigDoc& doc, const std::string& key) {
    return require_key(doc, key, ConfigValue::Kind::array, "numeric array").arr;
}

std::vector<double> arr_or(const ConfigDoc& doc, const std::string& key,
                           const std::vector<double>& fallback) {
    return has_key(doc, key) ? require_arr(doc, key) : fallback;
}

Domain domain_from_config(const ConfigDoc& doc) {
    const std::string kind = require_str(doc, "domain.kind");
    if (kind == "whole_space") return make_whole_space(require_dim(doc));
    if (kind == "half_space")
        return make_half_space(require_dim(doc), int(num_or(doc, "domain.axis", 0.0)),
                               num_or(doc, "domain.offset", 0.0));
    if (kind == "interval")
        return make_interval(require_num(doc, "domain.a"), require_num(doc, "domain.b"));
    if (kind == "box") {
        const int d = require_dim(doc);
        const auto a = require_arr(doc, "domain.a");
        const auto b = require_arr(doc, "domain.b");
        if (int(a.size()) != d || int(b.size()) != d)
            throw input_error("config: domain.a and domain.b must have d entries");
        return make_box(vec_of(a), vec_of(b));
    }
    if (kind == "disk") {
        const auto c = require_arr(doc, "domain.center");
        if (c.size() != 2) throw input_error("config: domain.center must have 2 entries");
        return make_disk(vec_of(c), require_num(doc, "domain.radius"));
    }
    throw input_error("config: unknown domain.kind '" + kind + "'");
}

ExperimentConfig load_experiment(const std::string& path, const std::string& env_seed) {
    ExperimentConfig cfg;
    cfg.doc = parse_config_file(path);

    if (!env_seed.empty()) {
        const char* begin = env_seed.c_str();
        char* end = nullptr;
        const unsigned long long v = std::strtoull(begin, &end, 10);
        if (end == begin || *end != '\0')
            throw input_error("IML_SEED must be a decimal 64-bit integer");
        ConfigValue cv;
        cv.kind = ConfigValue::Kind::number;
        cv.num = double(v);
        cfg.doc["run.seed"] = cv;
        cfg.seed = v;
        cfg.seed_from_env = true;
    } else {
        if (!has_key(cfg.doc, "run.seed"))
            throw input_error("config: missing key 'run.seed' (all runs must be seeded)");
        const double s = require_num(cfg.doc, "run.seed");
        if (!(s >= 0.0) || s != std::floor(s))
            throw input_error("config: run.seed must be a nonnegative integer");
        cfg.seed = std::uint64_t(s);
    }
    cfg.hash12 = config_hash12(cfg.doc);

    cfg.domain = domain_from_config(cfg.doc);

    const double p = num_or(cfg.doc, "run.p", 2.0);
    if (p < 1.0 || p != std::floor(p)) throw input_error("config: run.p must be a positive integer");
    cfg.p = int(p);

    cfg.t = num_or(cfg.doc, "run.t", 1.0);
    cfg.dt = num_or(cfg.doc, "run.dt", 1e-3);
    if (!(cfg.t > 0.0)) throw input_error("config: run.t must be positive");
    if (!(cfg.dt > 0.0) || cfg.dt > cfg.t)
        throw input_error("config: run.dt must lie in (0, run.t]");
    cfg.eps = num_or(cfg.doc, "run.eps", 0.05);
    if (!(cfg.eps > 0.0)) throw input_error("config: run.eps must be positive");
    cfg.delta = num_or(cfg.doc, "run.delta", 0.1);
    if (!(cfg.delta > 0.0)) throw input_error("config: run.delta must be positive");

    const double n = num_or(cfg.doc, "run.samples", 1000.0);
    if (n < 1.0 || n != std::floor(n))
        throw input_error("config: run.samples must be a positive integer");
    cfg.samples = std::int64_t(n);

    // default start: center of bounded domains, origin on the whole space
    // (translation invariance makes it canonical); half-spaces require run.x0
    std::vector<double> x0_default;
    if (cfg.domain.kind == DomainKind::whole_space)
        x0_default.assign(size_t(cfg.domain.d), 0.0);
    else if (cfg.domain.kind == DomainKind::box)
        for (int k = 0; k < cfg.domain.d; ++k)
            x0_default.push_back(0.5 * (cfg.domain.a[k] + cfg.domain.b[k]));
    else if (cfg.domain.kind == DomainKind::disk)
        x0_default = {cfg.domain.center[0], cfg.domain.center[1]};
    const auto x0 = arr_or(cfg.doc, "run.x0", x0_default);
    if (int(x0.size()) != cfg.domain.d)
        throw input_error("config: run.x0 must have d entries (required for unbounded domains)");
    cfg.x0 = vec_of(x0);

    cfg.grid_h = num_or(cfg.doc, "grid.h", 1.0 / 128);
    cfg.grid_margin = num_or(cfg.doc, "grid.margin", cfg.domain.bounded() ? 0.0 : 2.0);
    if (!(cfg.grid_h > 0.0)) throw input_error("config: grid.h must be positive");
    if (cfg.grid_margin < 0.0) throw input_error("config: grid.margin must be nonnegative");

    cfg.t_list = arr_or(cfg.doc, "rate.t_list", {cfg.t});
    for (size_t i = 0; i < cfg.t_list.size(); ++i) {
        if (!(cfg.t_list[i] > 0.0)) throw input_error("config: rate.t_list entries must be positive");
        if (i > 0 && !(cfg.t_list[i] > cfg.t_list[i - 1]))
            throw input_error("config: rate.t_list must increase strictly");
    }
    cfg.eps_list = arr_or(cfg.doc, "constants.eps_list", {cfg.eps});
    cfg.delta_list = arr_or(cfg.doc, "constants.delta_list", {cfg.delta});
    for (const double e : cfg.eps_list)
        if (!(e > 0.0)) throw input_error("config: constants.eps_list entries must be positive");
    for (const double d : cfg.delta_list)
        if (!(d > 0.0)) throw input_error("config: constants.delta_list entries must be positive");

    return cfg;
}

}  // namespace iml
