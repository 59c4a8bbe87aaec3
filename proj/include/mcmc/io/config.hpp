#pragma once
//
// Run configuration: one `key = value` per line, `#` starts a comment.
// Keys carry their unit (r0_m, D_Tx_m2_per_s, tau_s). Values are numbers,
// words, or lists of numbers: `1, 2, 3`, `linspace(a, b, n)`, `logspace(a, b, n)`
// (the latter from 10^a to 10^b).

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "mcmc/channel/env_params.hpp"
#include "mcmc/error.hpp"

namespace mcmc::io {

class Config {
public:
    Config() = default;

    static Config parse(std::string_view text, std::string origin = "<config>") {
        Config c;
        c.origin_ = std::move(origin);
        std::istringstream in{std::string(text)};
        std::string line;
        int no = 0;
        while (std::getline(in, line)) {
            ++no;
            if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
            const std::string body = trim(line);
            if (body.empty()) continue;
            const auto eq = body.find('=');
            if (eq == std::string::npos) throw config_error(c.origin_ + ": expected `key = value`", no);
            const std::string key = trim(body.substr(0, eq));
            const std::string value = trim(body.substr(eq + 1));
            if (key.empty()) throw config_error(c.origin_ + ": empty key", no);
            for (char ch : key) {
                if (!(std::isalnum(static_cast<unsigned char>(ch)) || ch == '_')) {
                    throw config_error(c.origin_ + ": invalid character in key `" + key + "`", no);
                }
            }
            if (value.empty()) throw config_error(c.origin_ + ": no value for `" + key + "`", no);
            if (c.entries_.count(key)) throw config_error(c.origin_ + ": duplicate key `" + key + "`", no);
            c.entries_[key] = {value, no};
        }
        return c;
    }

    static Config load(const std::string& path) {
        std::ifstream f(path);
        if (!f) throw config_error("cannot read config file `" + path + "`");
        std::stringstream ss;
        ss << f.rdbuf();
        return parse(ss.str(), path);
    }

    const std::string& origin() const { return origin_; }
    bool has(const std::string& key) const { return entries_.count(key) != 0; }

    double number(const std::string& key) const { return parse_number(key, require(key)); }
    double number(const std::string& key, double fallback) const {
        return has(key) ? number(key) : fallback;
    }

    /// A positive (or non-negative with allow_zero) number.
    double positive(const std::string& key, double fallback, bool allow_zero = false) const {
        const double v = number(key, fallback);
        if (!(allow_zero ? v >= 0.0 : v > 0.0)) fail(key, allow_zero ? "must be >= 0" : "must be > 0");
        return v;
    }

    std::int64_t integer(const std::string& key) const {
        const double v = number(key);
        if (v != std::floor(v) || std::abs(v) > 9.0e15) fail(key, "must be an integer");
        return static_cast<std::int64_t>(v);
    }
    std::int64_t integer(const std::string& key, std::int64_t fallback) const {
        return has(key) ? integer(key) : fallback;
    }

    std::string word(const std::string& key) const { return require(key).value; }
    std::string word(const std::string& key, const std::string& fallback) const {
        return has(key) ? word(key) : fallback;
    }

    /// One of the allowed words.
    std::string choice(const std::string& key, const std::vector<std::string>& allowed,
                       const std::string& fallback) const {
        const std::string v = word(key, fallback);
        for (const auto& a : allowed) {
            if (v == a) return v;
        }
        std::string list;
        for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
        fail(key, "must be one of: " + list);
        return v;
    }

    std::vector<double> list(const std::string& key) const {
        const auto& e = require(key);
        std::vector<double> out;
        const std::string& v = e.value;
        const bool lin = v.rfind("linspace(", 0) == 0, log = v.rfind("logspace(", 0) == 0;
        if (lin || log) {
            if (v.back() != ')') fail(key, "unterminated " + std::string(lin ? "linspace" : "logspace"));
            const auto args = split(v.substr(9, v.size() - 10));
            if (args.size() != 3) fail(key, "expects (start, stop, count)");
            const double a = parse_number(key, {args[0], e.line});
            const double b = parse_number(key, {args[1], e.line});
            const double n = parse_number(key, {args[2], e.line});
            if (n < 1 || n != std::floor(n) || n > 1e7) fail(key, "count must be a positive integer");
            const auto count = static_cast<std::size_t>(n);
            for (std::size_t k = 0; k < count; ++k) {
                const double x = count == 1 ? a : a + (b - a) * static_cast<double>(k) / static_cast<double>(count - 1);
                out.push_back(log ? std::pow(10.0, x) : x);
            }
            return out;
        }
        for (const auto& item : split(v)) out.push_back(parse_number(key, {item, e.line}));
        return out;
    }
    std::vector<double> list(const std::string& key, const std::vector<double>& fallback) const {
        return has(key) ? list(key) : fallback;
    }

    /// A non-empty list.
    std::vector<double> nonempty_list(const std::string& key) const {
        auto v = list(key);
        if (v.empty()) fail(key, "must not be empty");
        return v;
    }

    /// Environment keys on top of a base scenario.
    channel::EnvParams env(channel::EnvParams base) const {
        base.D_Tx = number("D_Tx_m2_per_s", base.D_Tx);
        base.D_Rx = number("D_Rx_m2_per_s", base.D_Rx);
        base.D_X = number("D_X_m2_per_s", base.D_X);
        base.a_tx = number("a_tx_m", base.a_tx);
        base.a_rx = number("a_rx_m", base.a_rx);
        base.r0 = number("r0_m", base.r0);
        try {
            base.validate();
        } catch (const std::invalid_argument& e) {
            throw config_error(origin_ + ": " + e.what());
        }
        return base;
    }

    /// Throws for any key outside `known`: catches typos such as
    /// `D_tx_m2_per_s` that would otherwise silently fall back to a default.
    void reject_unknown(const std::set<std::string>& known) const {
        for (const auto& [key, e] : entries_) {
            if (!known.count(key)) throw config_error(origin_ + ": unknown key `" + key + "`", e.line);
        }
    }

    /// Error attributed to the line of `key` (or the file when absent).
    [[noreturn]] void fail(const std::string& key, const std::string& what) const {
        const auto it = entries_.find(key);
        throw config_error(origin_ + ": `" + key + "` " + what, it == entries_.end() ? 0 : it->second.line);
    }

private:
    struct Entry {
        std::string value;
        int line = 0;
    };

    const Entry& require(const std::string& key) const {
        const auto it = entries_.find(key);
        if (it == entries_.end()) throw config_error(origin_ + ": missing required key `" + key + "`");
        return it->second;
    }

    double parse_number(const std::string& key, const Entry& e) const {
        const std::string s = trim(e.value);
        double v = 0.0;
        const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
            throw config_error(origin_ + ": `" + key + "` expects a number, got `" + s + "`", e.line);
        }
        return v;
    }

    static std::string trim(const std::string& s) {
        const auto b = s.find_first_not_of(" \t\r\n");
        if (b == std::string::npos) return {};
        const auto e = s.find_last_not_of(" \t\r\n");
        return s.substr(b, e - b + 1);
    }

    static std::vector<std::string> split(const std::string& s) {
        std::vector<std::string> out;
        std::string item;
        std::istringstream in(s);
        while (std::getline(in, item, ',')) {
            item = trim(item);
            if (!item.empty()) out.push_back(item);
        }
        return out;
    }

    std::string origin_ = "<config>";
    std::map<std::string, Entry> entries_;
};

}  // namespace mcmc::io
