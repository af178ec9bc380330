#pragma once

// Run outputs: <run>.csv (data), <run>.json (config echo + summary + pass
// flags), <run>.manifest.json (paths, seed, timestamps). Only the manifest
// carries wall-clock data, so CSV and JSON are byte-identical across reruns.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <fmt/chrono.h>
#include <fmt/format.h>
#include <json.hpp>

#include "graphshift/error.hpp"

namespace graphshift::cli {

// Comma-separated, '.' decimal, header row, LF endings; doubles in shortest
// round-trip form.
class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

    template <class... Ts>
    void add(const Ts&... values) {
        if (sizeof...(Ts) != header_.size()) fail(ErrorKind::invalid_input, "csv: column count mismatch");
        std::vector<std::string> row;
        (row.push_back(cell(values)), ...);
        rows_.push_back(std::move(row));
    }

    std::size_t size() const { return rows_.size(); }

    std::string str() const {
        std::string out = fmt::format("{}\n", fmt::join(header_, ","));
        for (const auto& r : rows_) out += fmt::format("{}\n", fmt::join(r, ","));
        return out;
    }

private:
    template <class T>
    static std::string cell(const T& v) {
        if constexpr (std::is_same_v<T, bool>) return v ? "1" : "0";
        else return fmt::format("{}", v);
    }

    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

inline std::string utc_now() {
    return fmt::format("{:%Y-%m-%dT%H:%M:%SZ}", fmt::gmtime(std::chrono::system_clock::to_time_t(
                                                   std::chrono::system_clock::now())));
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorKind::invalid_input, "cannot write " + path.string());
    out << text;
}

struct RunOutputs {
    std::filesystem::path csv, json, manifest;
};

inline RunOutputs write_run(const std::filesystem::path& dir, const std::string& run, const CsvTable& csv,
                            const nlohmann::json& result, const nlohmann::json& manifest_base) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) fail(ErrorKind::invalid_input, "cannot create " + dir.string() + ": " + ec.message());
    RunOutputs o{dir / (run + ".csv"), dir / (run + ".json"), dir / (run + ".manifest.json")};
    write_text(o.csv, csv.str());
    write_text(o.json, result.dump(2) + "\n");
    auto manifest = manifest_base;
    manifest["outputs"] = {o.csv.string(), o.json.string(), o.manifest.string()};
    manifest["finished"] = utc_now();
    write_text(o.manifest, manifest.dump(2) + "\n");
    return o;
}

}  // namespace graphshift::cli
