#include "eo2sar/nn/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>

#include "eo2sar/errors.hpp"
#include "eo2sar/strings.hpp"

namespace eo2sar::nn {

namespace {

constexpr char kMagic[5] = {'E', 'O', 'S', 'A', 'R'};
constexpr char kVersion = '1';

void put_u32(std::string& out, uint32_t v) {
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>((v >> 8) & 0xff));
    out.push_back(static_cast<char>((v >> 16) & 0xff));
    out.push_back(static_cast<char>((v >> 24) & 0xff));
}

void put_f32(std::string& out, float v) { put_u32(out, std::bit_cast<uint32_t>(v)); }

std::string join3(const std::array<int, 3>& a) {
    return std::to_string(a[0]) + "," + std::to_string(a[1]) + "," + std::to_string(a[2]);
}

std::string config_block(const Checkpoint& checkpoint) {
    const NetworkConfig& c = checkpoint.config;
    std::string block;
    block += "input_channels=" + std::to_string(c.input_channels) + "\n";
    block += "input_size=" + std::to_string(c.input_size) + "\n";
    block += "conv_channels=" + join3(c.conv_channels) + "\n";
    block += "kernel_sizes=" + join3(c.kernel_sizes) + "\n";
    block += "strides=" + join3(c.strides) + "\n";
    block += "paddings=" + join3(c.paddings) + "\n";
    block += "dropout_p=" + format_double(c.dropout_p) + "\n";
    block += "num_classes=" + std::to_string(NetworkConfig::num_classes) + "\n";
    for (const auto& [key, value] : checkpoint.extras) {
        block += key + "=" + value + "\n";
    }
    return block;
}

// Sequential little-endian reader over the loaded file bytes.
class Cursor {
public:
    Cursor(const std::string& data, const std::string& path)
        : data_(data), path_(path), pos_(0) {}

    size_t remaining() const { return data_.size() - pos_; }

    const char* take(size_t n, const char* what) {
        if (remaining() < n) {
            throw FormatError("truncated checkpoint " + path_ + ": ran out of bytes reading " +
                              what);
        }
        const char* p = data_.data() + pos_;
        pos_ += n;
        return p;
    }

    uint32_t u32(const char* what) {
        const unsigned char* p = reinterpret_cast<const unsigned char*>(take(4, what));
        return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
               (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
    }

    float f32(const char* what) { return std::bit_cast<float>(u32(what)); }

private:
    const std::string& data_;
    std::string path_;
    size_t pos_;
};

std::array<int, 3> parse_triple(const std::string& value, const std::string& key,
                                const std::string& path) {
    auto parts = split(value, ',');
    if (parts.size() != 3) {
        throw FormatError("checkpoint " + path + ": key " + key + " needs three values, got \"" +
                          value + "\"");
    }
    std::array<int, 3> out{};
    for (size_t i = 0; i < 3; ++i) {
        auto v = try_parse_int(parts[i]);
        if (!v) {
            throw FormatError("checkpoint " + path + ": key " + key + " has a non-integer field \"" +
                              parts[i] + "\"");
        }
        out[i] = static_cast<int>(*v);
    }
    return out;
}

int parse_int_value(const std::string& value, const std::string& key, const std::string& path) {
    auto v = try_parse_int(value);
    if (!v) {
        throw FormatError("checkpoint " + path + ": key " + key + " is not an integer: \"" + value +
                          "\"");
    }
    return static_cast<int>(*v);
}

void apply_config_line(Checkpoint& out, const std::string& key, const std::string& value,
                       const std::string& path, std::vector<std::string>& seen) {
    NetworkConfig& c = out.config;
    if (key == "input_channels") {
        c.input_channels = parse_int_value(value, key, path);
    } else if (key == "input_size") {
        c.input_size = parse_int_value(value, key, path);
    } else if (key == "conv_channels") {
        c.conv_channels = parse_triple(value, key, path);
    } else if (key == "kernel_sizes") {
        c.kernel_sizes = parse_triple(value, key, path);
    } else if (key == "strides") {
        c.strides = parse_triple(value, key, path);
    } else if (key == "paddings") {
        c.paddings = parse_triple(value, key, path);
    } else if (key == "dropout_p") {
        auto v = try_parse_double(value);
        if (!v) {
            throw FormatError("checkpoint " + path + ": dropout_p is not a number: \"" + value +
                              "\"");
        }
        c.dropout_p = *v;
    } else if (key == "num_classes") {
        if (parse_int_value(value, key, path) != NetworkConfig::num_classes) {
            throw FormatError("checkpoint " + path + ": num_classes=" + value +
                              " is not supported (expected " +
                              std::to_string(NetworkConfig::num_classes) + ")");
        }
    } else {
        out.extras[key] = value;
        return;
    }
    seen.push_back(key);
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
    checkpoint.config.validate();
    std::string out;
    out.append(kMagic, sizeof(kMagic));
    out.push_back(kVersion);
    out.push_back('\n');

    std::string block = config_block(checkpoint);
    put_u32(out, static_cast<uint32_t>(block.size()));
    out += block;

    auto named = checkpoint.params.named();
    put_u32(out, static_cast<uint32_t>(named.size()));
    for (const auto& [name, tensor] : named) {
        put_u32(out, static_cast<uint32_t>(name.size()));
        out += name;
        put_u32(out, static_cast<uint32_t>(tensor->rank()));
        for (int d = 0; d < tensor->rank(); ++d) {
            put_u32(out, static_cast<uint32_t>(tensor->dim(d)));
        }
    }
    for (const auto& [name, tensor] : named) {
        for (int64_t i = 0; i < tensor->size(); ++i) put_f32(out, (*tensor)[i]);
    }

    std::ofstream file(path, std::ios::binary | std::ios::trunc);
    if (!file) throw DataError("cannot open checkpoint for writing: " + path.string());
    file.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!file) throw DataError("failed writing checkpoint: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream file(path, std::ios::binary);
    if (!file) throw DataError("cannot open checkpoint: " + path.string());
    std::string data((std::istreambuf_iterator<char>(file)), std::istreambuf_iterator<char>());
    const std::string p = path.string();

    if (data.size() < 7 || std::memcmp(data.data(), kMagic, sizeof(kMagic)) != 0) {
        throw FormatError("not a checkpoint file (bad magic): " + p);
    }
    if (data[5] != kVersion) {
        throw FormatError("unsupported checkpoint version '" + std::string(1, data[5]) + "' in " +
                          p);
    }
    if (data[6] != '\n') {
        throw FormatError("malformed checkpoint header: " + p);
    }

    Cursor cur(data, p);
    cur.take(7, "header");

    Checkpoint out;
    const uint32_t block_len = cur.u32("config block length");
    std::string block(cur.take(block_len, "config block"), block_len);
    std::vector<std::string> seen;
    for (const auto& line : split(block, '\n')) {
        if (line.empty()) continue;
        size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw FormatError("checkpoint " + p + ": config line without '=': \"" + line + "\"");
        }
        apply_config_line(out, line.substr(0, eq), line.substr(eq + 1), p, seen);
    }
    for (const char* required : {"input_channels", "input_size", "conv_channels", "kernel_sizes",
                                 "strides", "paddings", "dropout_p"}) {
        if (std::find(seen.begin(), seen.end(), required) == seen.end()) {
            throw FormatError("checkpoint " + p + ": config block is missing " + required);
        }
    }
    try {
        out.config.validate();
    } catch (const ConfigError& e) {
        throw FormatError("checkpoint " + p + ": invalid stored config: " + e.what());
    }

    struct Entry {
        std::string name;
        Shape shape;
        int64_t numel;
    };
    const uint32_t count = cur.u32("parameter count");
    std::vector<Entry> table;
    int64_t total = 0;
    for (uint32_t i = 0; i < count; ++i) {
        const uint32_t name_len = cur.u32("parameter name length");
        std::string name(cur.take(name_len, "parameter name"), name_len);
        const uint32_t rank = cur.u32("parameter rank");
        if (rank == 0 || rank > 8) {
            throw FormatError("checkpoint " + p + ": parameter " + name +
                              " has implausible rank " + std::to_string(rank));
        }
        Shape shape;
        int64_t numel = 1;
        for (uint32_t d = 0; d < rank; ++d) {
            const uint32_t extent = cur.u32("parameter extent");
            if (extent == 0 || extent > (1u << 24)) {
                throw FormatError("checkpoint " + p + ": parameter " + name +
                                  " has implausible extent " + std::to_string(extent));
            }
            shape.push_back(static_cast<int>(extent));
            numel *= extent;
            if (numel > (int64_t(1) << 34)) {
                throw FormatError("checkpoint " + p + ": parameter " + name +
                                  " is implausibly large");
            }
        }
        total += numel;
        table.push_back({std::move(name), std::move(shape), numel});
    }

    if (cur.remaining() != static_cast<size_t>(total) * 4) {
        throw FormatError("checkpoint " + p + ": shape table implies " + std::to_string(total * 4) +
                          " payload bytes but " + std::to_string(cur.remaining()) + " remain");
    }

    // The payload is only trusted once every tensor matches the shape the
    // stored config implies.
    ModelParams<float> expected = build_model<float>(out.config, 0);
    auto named = expected.named();
    if (table.size() != named.size()) {
        throw FormatError("checkpoint " + p + ": expected " + std::to_string(named.size()) +
                          " parameters, found " + std::to_string(table.size()));
    }
    out.params = ModelParams<float>{};
    auto out_named = out.params.named();
    std::vector<bool> filled(named.size(), false);
    for (const Entry& entry : table) {
        size_t slot = named.size();
        for (size_t i = 0; i < named.size(); ++i) {
            if (named[i].first == entry.name) {
                slot = i;
                break;
            }
        }
        if (slot == named.size()) {
            throw FormatError("checkpoint " + p + ": unknown parameter \"" + entry.name + "\"");
        }
        if (filled[slot]) {
            throw FormatError("checkpoint " + p + ": duplicate parameter \"" + entry.name + "\"");
        }
        if (entry.shape != named[slot].second->shape()) {
            throw FormatError("checkpoint " + p + ": parameter " + entry.name + " has shape " +
                              shape_str(entry.shape) + " but the stored config implies " +
                              shape_str(named[slot].second->shape()));
        }
        filled[slot] = true;
        Tensor<float> t(entry.shape);
        for (int64_t i = 0; i < entry.numel; ++i) t[i] = cur.f32("payload");
        *out_named[slot].second = std::move(t);
    }
    return out;
}

}  // namespace eo2sar::nn
