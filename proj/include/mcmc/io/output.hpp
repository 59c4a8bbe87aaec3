#pragma once
//
// Output staging: a command collects all of its files in memory and they are
// written only once it has succeeded, first into a hidden staging directory
// next to the target and then renamed into place. A failing command leaves
// the output directory untouched.

#include <chrono>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>
#include <system_error>

#include <unistd.h>

#include <json.hpp>

#include "mcmc/io/csv.hpp"

namespace mcmc::io {

struct RunManifest {
    std::string command;
    std::string config_path;
    std::uint64_t seed = 0;
    std::string output_dir;
    std::string scale;
    std::string timestamp;  ///< ISO-8601, UTC

    static std::string now_iso8601() {
        const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
        std::tm tm{};
        gmtime_r(&t, &tm);
        char buf[32];
        std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
        return buf;
    }

    std::string json() const {
        nlohmann::ordered_json j;
        j["command"] = command;
        j["config_path"] = config_path;
        j["seed"] = seed;
        j["output_dir"] = output_dir;
        j["scale"] = scale;
        j["timestamp"] = timestamp;
        return j.dump(2) + "\n";
    }
};

class OutputSet {
public:
    void add(const std::string& name, std::string content) {
        if (name.empty() || name.find('/') != std::string::npos) {
            throw std::invalid_argument("OutputSet: bad file name `" + name + "`");
        }
        files_[name] = std::move(content);
    }
    void add(const std::string& name, const CsvTable& table) { add(name, table.str()); }

    const std::map<std::string, std::string>& files() const { return files_; }
    bool contains(const std::string& name) const { return files_.count(name) != 0; }
    const std::string& at(const std::string& name) const { return files_.at(name); }

    /// Writes every file into `dir` (created if needed).
    void commit(const std::filesystem::path& dir) const {
        namespace fs = std::filesystem;
        fs::create_directories(dir);
        const fs::path stage = dir / (".staging-" + std::to_string(::getpid()));
        fs::remove_all(stage);
        fs::create_directory(stage);
        try {
            for (const auto& [name, content] : files_) {
                std::ofstream f(stage / name, std::ios::binary);
                f << content;
                f.close();
                if (!f) throw std::runtime_error("cannot write `" + (stage / name).string() + "`");
            }
            for (const auto& [name, content] : files_) fs::rename(stage / name, dir / name);
        } catch (...) {
            std::error_code ec;
            fs::remove_all(stage, ec);
            throw;
        }
        fs::remove_all(stage);
    }

private:
    std::map<std::string, std::string> files_;
};

}  // namespace mcmc::io
