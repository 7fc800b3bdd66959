#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "latenteval/generator.hpp"

namespace latenteval {

/// A batch of flat samples, optionally tagged with a split ("train"/"test").
///
/// Two on-disk forms:
///  - binary: header {magic "EVGS", u32 version=1, u32 count, u32 flat_length}
///    followed by count*flat_length little-endian 32-bit floats (no splits);
///  - CSV for tiny fixtures: one sample per row; an optional header row may
///    name a "split" column carrying the tag, the remaining columns are the
///    sample values in order.
struct Dataset {
    std::size_t flat_length = 0;
    std::vector<std::vector<double>> samples;
    std::vector<std::string> splits;  // empty, or one tag per sample

    std::size_t count() const { return samples.size(); }
    std::string split_of(std::size_t i) const {
        return splits.empty() ? std::string() : splits[i];
    }
};

// sniffs the magic bytes and dispatches to the binary or CSV loader
Dataset load_dataset(const std::filesystem::path& path);

Dataset load_dataset_binary(const std::filesystem::path& path);
Dataset load_dataset_csv(const std::filesystem::path& path);

// binary form stores values as 32-bit floats and drops split tags
void save_dataset_binary(const Dataset& ds, const std::filesystem::path& path);
void save_dataset_csv(const Dataset& ds, const std::filesystem::path& path);

}  // namespace latenteval
