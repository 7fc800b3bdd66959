#include "latenteval/dataset.hpp"

#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

namespace latenteval {

namespace {

constexpr char kMagic[4] = {'E', 'V', 'G', 'S'};
constexpr std::uint32_t kVersion = 1;

static_assert(std::endian::native == std::endian::little,
              "dataset I/O assumes a little-endian host");

[[noreturn]] void fail(const std::filesystem::path& path, const std::string& what) {
    throw SpecError("dataset " + path.string() + ": " + what);
}

std::uint32_t read_u32(std::istream& in) {
    std::uint32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof v);
    return v;
}

void write_u32(std::ostream& out, std::uint32_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

bool parse_double(const std::string& field, double& out) {
    const char* begin = field.data();
    const char* end = begin + field.size();
    const auto res = std::from_chars(begin, end, out);
    return res.ec == std::errc() && res.ptr == end;
}

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    fields.push_back(cur);
    for (auto& f : fields) {
        const auto b = f.find_first_not_of(" \t");
        const auto e = f.find_last_not_of(" \t");
        f = b == std::string::npos ? std::string() : f.substr(b, e - b + 1);
    }
    return fields;
}

}  // namespace

Dataset load_dataset_binary(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(path, "cannot open");

    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0) fail(path, "bad magic (expected EVGS)");
    const std::uint32_t version = read_u32(in);
    if (version != kVersion) fail(path, "unsupported version " + std::to_string(version));
    const std::uint32_t count = read_u32(in);
    const std::uint32_t flat_length = read_u32(in);
    if (!in) fail(path, "truncated header");
    if (flat_length == 0) fail(path, "flat_length must be positive");

    Dataset ds;
    ds.flat_length = flat_length;
    ds.samples.resize(count);
    std::vector<float> row(flat_length);
    for (std::uint32_t i = 0; i < count; ++i) {
        in.read(reinterpret_cast<char*>(row.data()),
                static_cast<std::streamsize>(sizeof(float) * flat_length));
        if (!in) fail(path, "truncated at sample " + std::to_string(i));
        ds.samples[i].assign(row.begin(), row.end());
    }
    return ds;
}

void save_dataset_binary(const Dataset& ds, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(path, "cannot write");
    out.write(kMagic, 4);
    write_u32(out, kVersion);
    write_u32(out, static_cast<std::uint32_t>(ds.count()));
    write_u32(out, static_cast<std::uint32_t>(ds.flat_length));
    std::vector<float> row(ds.flat_length);
    for (const auto& sample : ds.samples) {
        if (sample.size() != ds.flat_length) fail(path, "ragged sample row");
        for (std::size_t j = 0; j < sample.size(); ++j) row[j] = static_cast<float>(sample[j]);
        out.write(reinterpret_cast<const char*>(row.data()),
                  static_cast<std::streamsize>(sizeof(float) * row.size()));
    }
}

Dataset load_dataset_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(path, "cannot open");

    Dataset ds;
    std::string line;
    bool header_checked = false;
    std::ptrdiff_t split_col = -1;
    std::size_t line_no = 0;
    bool has_any_split = false;

    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos) continue;
        auto fields = split_fields(line);

        if (!header_checked) {
            header_checked = true;
            double probe;
            if (!parse_double(fields[0], probe)) {
                // header row; locate the optional split column
                for (std::size_t c = 0; c < fields.size(); ++c) {
                    if (fields[c] == "split") split_col = static_cast<std::ptrdiff_t>(c);
                }
                continue;
            }
        }

        std::vector<double> values;
        std::string split;
        values.reserve(fields.size());
        for (std::size_t c = 0; c < fields.size(); ++c) {
            if (static_cast<std::ptrdiff_t>(c) == split_col) {
                split = fields[c];
                continue;
            }
            double v;
            if (!parse_double(fields[c], v))
                fail(path, "line " + std::to_string(line_no) + " field " + std::to_string(c + 1) +
                               ": '" + fields[c] + "' is not a number");
            values.push_back(v);
        }
        if (ds.flat_length == 0) {
            ds.flat_length = values.size();
        } else if (values.size() != ds.flat_length) {
            fail(path, "line " + std::to_string(line_no) + ": expected " +
                           std::to_string(ds.flat_length) + " values, got " +
                           std::to_string(values.size()));
        }
        ds.samples.push_back(std::move(values));
        ds.splits.push_back(split);
        if (!split.empty()) has_any_split = true;
    }
    if (ds.flat_length == 0) fail(path, "no samples");
    if (!has_any_split) ds.splits.clear();
    return ds;
}

void save_dataset_csv(const Dataset& ds, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) fail(path, "cannot write");
    const bool tagged = !ds.splits.empty();
    if (tagged) {
        out << "split";
        for (std::size_t j = 0; j < ds.flat_length; ++j) out << ",v" << j;
        out << "\n";
    }
    char buf[32];
    for (std::size_t i = 0; i < ds.count(); ++i) {
        if (tagged) out << ds.splits[i] << ",";
        const auto& sample = ds.samples[i];
        for (std::size_t j = 0; j < sample.size(); ++j) {
            std::snprintf(buf, sizeof buf, "%.17g", sample[j]);
            out << (j ? "," : "") << buf;
        }
        out << "\n";
    }
}

Dataset load_dataset(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(path, "cannot open");
    char magic[4] = {0, 0, 0, 0};
    in.read(magic, 4);
    in.close();
    if (std::memcmp(magic, kMagic, 4) == 0) return load_dataset_binary(path);
    return load_dataset_csv(path);
}

}  // namespace latenteval
