#pragma once

// Dataset container (little-endian, versioned):
//
//   "EDDS" u32 version  u32 N  N x string category name  u64 record count
//   per record:
//     string series_id  f64 sample_rate_hz
//     u32 n_bin_pairs   n x (string key, string value)
//     u64 n_samples     n x f32 sample
//     (N-1) x i32 count
//     u8 has_truth      [u64 n_events  n x (u64 onset, i32 category)]
//   "EDDE"
//
// Strings are u32 length + UTF-8 bytes. Loading validates everything and
// either returns the complete dataset or throws.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>

#include "edgar/binary_io.hpp"
#include "edgar/signal.hpp"

namespace edgar {

inline constexpr std::uint32_t dataset_format_version = 1;

inline void write_dataset(std::ostream& out, const Dataset& dataset) {
    dataset.validate();
    io::Writer w(out);
    w.bytes("EDDS", 4);
    w.put<std::uint32_t>(dataset_format_version);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(dataset.n_categories()));
    for (const auto& name : dataset.category_names) w.string(name);
    w.put<std::uint64_t>(dataset.recordings.size());
    for (const auto& rec : dataset.recordings) {
        w.string(rec.series.series_id);
        w.put<double>(rec.series.sample_rate_hz);
        w.put<std::uint32_t>(static_cast<std::uint32_t>(rec.series.bin_key.size()));
        for (const auto& [k, v] : rec.series.bin_key) {
            w.string(k);
            w.string(v);
        }
        w.put<std::uint64_t>(rec.series.samples.size());
        for (float s : rec.series.samples) w.put<float>(s);
        for (int c : rec.label.counts) w.put<std::int32_t>(c);
        w.put<std::uint8_t>(rec.truth ? 1 : 0);
        if (rec.truth) {
            w.put<std::uint64_t>(rec.truth->events.size());
            for (const auto& e : rec.truth->events) {
                w.put<std::uint64_t>(e.onset);
                w.put<std::int32_t>(e.category);
            }
        }
    }
    w.bytes("EDDE", 4);
    w.check();
}

inline Dataset read_dataset(std::istream& in) {
    io::Reader r(in);
    r.expect_magic("EDDS", "dataset");
    const auto version = r.get<std::uint32_t>();
    if (version != dataset_format_version)
        throw version_error("dataset format version " + std::to_string(version) + " is not supported (expected " +
                            std::to_string(dataset_format_version) + ")");
    const auto n_categories = r.get<std::uint32_t>();
    if (n_categories < 2 || n_categories > 1024) throw format_error("implausible category count " + std::to_string(n_categories));

    Dataset ds;
    ds.category_names.clear();
    for (std::uint32_t i = 0; i < n_categories; ++i) ds.category_names.push_back(r.string());
    const auto n_records = r.get<std::uint64_t>();
    constexpr std::uint64_t max_samples = std::uint64_t{1} << 34;
    for (std::uint64_t i = 0; i < n_records; ++i) {
        Recording rec;
        rec.series.series_id = r.string();
        rec.series.sample_rate_hz = r.get<double>();
        const auto n_pairs = r.get<std::uint32_t>();
        for (std::uint32_t p = 0; p < n_pairs; ++p) {
            auto key = r.string();
            rec.series.bin_key[std::move(key)] = r.string();
        }
        const auto n_samples = r.get<std::uint64_t>();
        if (n_samples > max_samples) throw format_error("implausible sample count");
        rec.series.samples.resize(static_cast<std::size_t>(n_samples));
        for (auto& s : rec.series.samples) s = r.get<float>();
        rec.label.counts.resize(n_categories - 1);
        for (auto& c : rec.label.counts) c = r.get<std::int32_t>();
        const auto has_truth = r.get<std::uint8_t>();
        if (has_truth > 1) throw format_error("corrupt ground-truth flag");
        if (has_truth) {
            GroundTruth truth;
            const auto n_events = r.get<std::uint64_t>();
            if (n_events > n_samples + 1) throw format_error("implausible event count");
            for (std::uint64_t e = 0; e < n_events; ++e) {
                PlantedEvent ev;
                ev.onset = static_cast<std::size_t>(r.get<std::uint64_t>());
                ev.category = r.get<std::int32_t>();
                truth.events.push_back(ev);
            }
            rec.truth = std::move(truth);
        }
        ds.recordings.push_back(std::move(rec));
    }
    r.expect_magic("EDDE", "dataset");
    try {
        ds.validate();
    } catch (const std::invalid_argument& e) {
        throw format_error(std::string("invalid dataset contents: ") + e.what());
    }
    return ds;
}

/// Writes to a sibling temporary file and renames it into place, so a failed
/// write never leaves a partial file at `path`.
template <class WriteFn>
void write_atomically(const std::filesystem::path& path, WriteFn&& write) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open '" + tmp.string() + "' for writing");
        try {
            write(out);
            out.flush();
            if (!out) throw std::runtime_error("write to '" + tmp.string() + "' failed");
        } catch (...) {
            out.close();
            std::error_code ec;
            std::filesystem::remove(tmp, ec);
            throw;
        }
    }
    std::filesystem::rename(tmp, path);
}

inline void save_dataset(const std::filesystem::path& path, const Dataset& dataset) {
    write_atomically(path, [&](std::ostream& out) { write_dataset(out, dataset); });
}

inline Dataset load_dataset(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open dataset '" + path.string() + "'");
    try {
        return read_dataset(in);
    } catch (const format_error& e) {
        if (dynamic_cast<const version_error*>(&e)) throw version_error(path.string() + ": " + e.what());
        throw format_error(path.string() + ": " + e.what());
    }
}

}  // namespace edgar
