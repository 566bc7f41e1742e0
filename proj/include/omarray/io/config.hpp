#pragma once

#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "../model.hpp"

namespace omarray::io
{

// Malformed configuration text or keys; distinct from parameter validation.
class ConfigError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

// Flat TOML-style table: `key = value` lines, optional `[section]` headers
// that prefix following keys as "section.key", '#' comments, quoted strings,
// numbers and true/false.
class ConfigTable
{
public:
    static ConfigTable parse(const std::string &text)
    {
        ConfigTable t;
        std::istringstream in(text);
        std::string line, section;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            line = strip_comment(line);
            line = trim(line);
            if (line.empty())
                continue;
            if (line.front() == '[') {
                if (line.back() != ']')
                    fail(lineno, "unterminated section header");
                section = trim(line.substr(1, line.size() - 2));
                if (section.empty() || !valid_key(section))
                    fail(lineno, "invalid section name");
                continue;
            }
            const auto eq = line.find('=');
            if (eq == std::string::npos)
                fail(lineno, "expected key = value");
            const std::string key = trim(line.substr(0, eq));
            std::string value = trim(line.substr(eq + 1));
            if (key.empty() || !valid_key(key))
                fail(lineno, "invalid key '" + key + "'");
            if (value.empty())
                fail(lineno, "missing value for '" + key + "'");
            if (value.front() == '"') {
                if (value.size() < 2 || value.back() != '"')
                    fail(lineno, "unterminated string");
                value = value.substr(1, value.size() - 2);
            }
            const std::string full = section.empty() ? key : section + "." + key;
            if (t.values_.count(full))
                fail(lineno, "duplicate key '" + full + "'");
            t.values_[full] = value;
            t.order_.push_back(full);
        }
        return t;
    }

    static ConfigTable load(const std::string &path)
    {
        std::ifstream f(path, std::ios::binary);
        if (!f)
            throw ConfigError("cannot open config file '" + path + "'");
        std::ostringstream ss;
        ss << f.rdbuf();
        return parse(ss.str());
    }

    bool has(const std::string &key) const { return values_.count(key) > 0; }

    bool has_section(const std::string &section) const
    {
        const std::string prefix = section + ".";
        for (const auto &k : order_)
            if (k.rfind(prefix, 0) == 0)
                return true;
        return false;
    }

    std::optional<std::string> string(const std::string &key) const
    {
        auto it = values_.find(key);
        if (it == values_.end())
            return std::nullopt;
        used_[key] = true;
        return it->second;
    }

    std::optional<double> number(const std::string &key) const
    {
        auto s = string(key);
        if (!s)
            return std::nullopt;
        try {
            std::size_t pos = 0;
            const double v = std::stod(*s, &pos);
            if (pos != s->size())
                throw std::invalid_argument("trailing characters");
            return v;
        } catch (const std::exception &) {
            throw ConfigError("value of '" + key + "' is not a number: " + *s);
        }
    }

    std::optional<bool> boolean(const std::string &key) const
    {
        auto s = string(key);
        if (!s)
            return std::nullopt;
        if (*s == "true")
            return true;
        if (*s == "false")
            return false;
        throw ConfigError("value of '" + key + "' is not true/false: " + *s);
    }

    double number_or(const std::string &key, double fallback) const { return number(key).value_or(fallback); }

    // Keys never read by any accessor; reported so typos do not pass silently.
    std::vector<std::string> unused_keys() const
    {
        std::vector<std::string> out;
        for (const auto &k : order_)
            if (!used_.count(k))
                out.push_back(k);
        return out;
    }

    const std::vector<std::string> &keys() const { return order_; }

private:
    [[noreturn]] static void fail(int line, const std::string &msg)
    {
        throw ConfigError("config line " + std::to_string(line) + ": " + msg);
    }

    static std::string trim(const std::string &s)
    {
        std::size_t b = 0, e = s.size();
        while (b < e && std::isspace(static_cast<unsigned char>(s[b])))
            ++b;
        while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1])))
            --e;
        return s.substr(b, e - b);
    }

    static std::string strip_comment(const std::string &s)
    {
        bool quoted = false;
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (s[i] == '"')
                quoted = !quoted;
            else if (s[i] == '#' && !quoted)
                return s.substr(0, i);
        }
        return s;
    }

    static bool valid_key(const std::string &k)
    {
        for (char c : k)
            if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-'))
                return false;
        return true;
    }

    std::map<std::string, std::string> values_;
    std::vector<std::string> order_;
    mutable std::map<std::string, bool> used_;
};

// Parameter keys of the [params] table. Frequencies and rates are ordinary
// frequencies in Hz (the /2pi convention); they are stored as angular rates.
//   omega1_hz, omega_m_hz, kappa_ex_hz, kappa_in_hz | q_1, gamma_m_hz | q_m,
//   omega_drive_hz, h_hz, n, phase_per_cell, cell_transit_s, t_base_k, chi_k
inline SystemParams params_from_table(const ConfigTable &t, const std::string &section = "params")
{
    auto key = [&](const char *k) { return section + "." + k; };
    auto required = [&](const char *k) {
        auto v = t.number(key(k));
        if (!v)
            throw ConfigError("missing required key '" + key(k) + "'");
        return *v;
    };
    SystemParams p;
    p.omega1 = hz_to_angular(required("omega1_hz"));
    p.omega_m = hz_to_angular(required("omega_m_hz"));
    p.kappa_ex = hz_to_angular(required("kappa_ex_hz"));

    const auto kin = t.number(key("kappa_in_hz"));
    const auto q1 = t.number(key("q_1"));
    if (kin && q1)
        throw ConfigError("give either kappa_in_hz or q_1, not both");
    if (q1) {
        if (!(*q1 > 0.0))
            throw ValidationError("q_1 must be positive");
        p.kappa_in = kappa_in_from_quality(p.omega1, *q1);
    } else {
        p.kappa_in = hz_to_angular(kin.value_or(0.0));
    }

    const auto gm = t.number(key("gamma_m_hz"));
    const auto qm = t.number(key("q_m"));
    if (gm && qm)
        throw ConfigError("give either gamma_m_hz or q_m, not both");
    if (qm) {
        if (!(*qm > 0.0))
            throw ValidationError("q_m must be positive");
        p.gamma_m = gamma_from_quality(p.omega_m, *qm);
    } else {
        p.gamma_m = hz_to_angular(gm.value_or(0.0));
    }

    p.omega_drive = hz_to_angular(t.number_or(key("omega_drive_hz"), 0.0));
    p.h_coupling = hz_to_angular(required("h_hz"));
    const double n = t.number_or(key("n"), 1.0);
    if (n != std::floor(n) || n < -1e9 || n > 1e9)
        throw ValidationError("n must be an integer");
    p.n_elements = static_cast<int>(n);
    p.phase_per_cell = t.number_or(key("phase_per_cell"), kPi / 2.0);
    p.cell_transit = t.number_or(key("cell_transit_s"), 0.0);
    p.t_base = t.number_or(key("t_base_k"), 0.0);
    p.chi = t.number_or(key("chi_k"), 0.0);
    return p;
}

// Exactly one parameter source: a top-level `preset = "NAME"` or a [params] table.
inline SystemParams resolve_params(const ConfigTable &t, std::string *preset_name = nullptr)
{
    const bool has_preset = t.has("preset");
    const bool has_table = t.has_section("params");
    if (has_preset == has_table)
        throw ConfigError("config must give exactly one of `preset` or a [params] table");
    if (has_preset) {
        const std::string name = *t.string("preset");
        auto p = presets::by_name(name);
        if (!p)
            throw ConfigError("unknown preset '" + name + "'");
        if (preset_name)
            *preset_name = name;
        return *p;
    }
    return params_from_table(t);
}

} // namespace omarray::io
