#pragma once

// Structured analysis report: key-sorted JSON (default) or flat key=value
// lines. Identical inputs and flags produce byte-identical output apart from
// the tool_version field.

#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace nvlex::report {

inline constexpr const char* tool_version = "1.0.0";

// FNV-1a 64-bit content hash, used to fingerprint input files in reports
inline std::uint64_t fnv1a(std::uint64_t h, const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string digest_files(const std::vector<std::string>& paths) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& path : paths) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw std::runtime_error(path + ": cannot open file for digest");
        char buf[8192];
        while (in.read(buf, sizeof buf) || in.gcount() > 0)
            h = fnv1a(h, buf, static_cast<std::size_t>(in.gcount()));
    }
    char out[17];
    static const char* hex = "0123456789abcdef";
    for (int i = 0; i < 16; ++i) out[i] = hex[(h >> (60 - 4 * i)) & 0xF];
    out[16] = '\0';
    return out;
}

struct Quantity {
    double value = 0.0;
    std::optional<double> error;
    std::string unit;  // empty for dimensionless
};

class AnalysisReport {
public:
    explicit AnalysisReport(std::string subcommand) : subcommand_(std::move(subcommand)) {}

    void set_input_digest(std::string digest) { input_digest_ = std::move(digest); }

    void add(const std::string& name, double value, std::optional<double> error = std::nullopt,
             const std::string& unit = "") {
        quantities_[name] = Quantity{value, error, unit};
    }
    void flag(const std::string& name, bool value) { flags_[name] = value; }
    void warn(const std::string& message) { warnings_.push_back(message); }

    const std::map<std::string, Quantity>& quantities() const { return quantities_; }
    const std::map<std::string, bool>& flags() const { return flags_; }
    const std::vector<std::string>& warnings() const { return warnings_; }

    // nlohmann::json keeps object keys sorted (std::map), giving stable bytes
    std::string to_json() const {
        nlohmann::json j;
        j["subcommand"] = subcommand_;
        j["tool_version"] = tool_version;
        j["input_digest"] = input_digest_;
        auto& params = j["parameters"];
        params = nlohmann::json::object();
        for (const auto& [name, q] : quantities_) {
            nlohmann::json e;
            e["value"] = q.value;
            if (q.error) e["error"] = *q.error;
            if (!q.unit.empty()) e["unit"] = q.unit;
            params[name] = e;
        }
        j["flags"] = flags_.empty() ? nlohmann::json::object() : nlohmann::json(flags_);
        j["warnings"] = warnings_;
        return j.dump(2) + "\n";
    }

    std::string to_flat() const {
        std::ostringstream out;
        out.precision(17);
        out << "subcommand=" << subcommand_ << '\n';
        out << "tool_version=" << tool_version << '\n';
        out << "input_digest=" << input_digest_ << '\n';
        for (const auto& [name, q] : quantities_) {
            out << name << '=' << q.value;
            if (q.error) out << " +- " << *q.error;
            if (!q.unit.empty()) out << ' ' << q.unit;
            out << '\n';
        }
        for (const auto& [name, v] : flags_) out << name << '=' << (v ? "true" : "false") << '\n';
        for (const auto& w : warnings_) out << "warning=" << w << '\n';
        return out.str();
    }

    std::string serialize(const std::string& format) const {
        if (format == "json") return to_json();
        if (format == "flat") return to_flat();
        throw std::invalid_argument("unknown report format '" + format + "' (json|flat)");
    }

private:
    std::string subcommand_;
    std::string input_digest_;
    std::map<std::string, Quantity> quantities_;
    std::map<std::string, bool> flags_;
    std::vector<std::string> warnings_;
};

}  // namespace nvlex::report
