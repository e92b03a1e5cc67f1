#include "tenevo/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "json_io.hpp"
#include "tenevo/errors.hpp"

namespace tenevo {

namespace {

using detail::Json;

constexpr std::array<char, 8> kMagic = {'T', 'N', 'N', 'C', 'K', 'P', 'T', '1'};
constexpr const char* kOrderTag = "dimension-major/layer/row-major-weights-then-bias";

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <class T>
void put_le(std::string& out, T v) {
    auto bytes = std::bit_cast<std::array<char, sizeof(T)>>(v);
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
    out.append(bytes.data(), bytes.size());
}

template <class T>
T get_le(const char* p) {
    std::array<char, sizeof(T)> bytes;
    std::memcpy(bytes.data(), p, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
    return std::bit_cast<T>(bytes);
}

Json header(const Checkpoint& c) {
    return Json{{"format", "tenevo-checkpoint"},
                {"order_version", ParamLayout::kOrderVersion},
                {"order", kOrderTag},
                {"arch", detail::arch_to_json(c.params.arch)},
                {"count", c.params.theta.size()},
                {"t", c.t},
                {"step", c.step}};
}

Checkpoint from_header(const Json& h, const std::string& where) {
    detail::require_keys(h, where, {"format", "order_version", "order", "arch", "count", "t", "step", "theta"});
    if (h.value("format", "") != "tenevo-checkpoint") throw IoError(where + ": not a checkpoint");
    if (h.value("order_version", -1) != ParamLayout::kOrderVersion) {
        throw IoError(where + ": unsupported flattening order version");
    }
    Checkpoint c;
    c.params.arch = detail::arch_from_json(h.at("arch"), where + ".arch");
    c.t = h.value("t", 0.0);
    c.step = h.value("step", std::int64_t{0});
    const auto count = h.at("count").get<std::size_t>();
    if (count != ParamLayout(c.params.arch).total()) {
        throw IoError(where + ": parameter count does not match the architecture");
    }
    c.params.theta.resize(count);
    return c;
}

std::string read_all(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_all(const std::filesystem::path& path, const std::string& data) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
    if (!out) throw IoError("write failed for " + path.string());
}

} // namespace

std::string to_string(CheckpointFormat f) { return f == CheckpointFormat::text ? "text" : "binary"; }

CheckpointFormat checkpoint_format_from_string(const std::string& s) {
    if (s == "binary") return CheckpointFormat::binary;
    if (s == "text") return CheckpointFormat::text;
    throw InvalidArgument("unknown checkpoint format '" + s + "'");
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path, CheckpointFormat format) {
    if (ckpt.params.theta.size() != ParamLayout(ckpt.params.arch).total()) {
        throw InvalidArgument("checkpoint: parameter count does not match the architecture");
    }
    std::string out;
    if (format == CheckpointFormat::text) {
        Json doc = header(ckpt);
        doc["theta"] = ckpt.params.theta;
        out = doc.dump(1) + "\n";
    } else {
        const std::string h = header(ckpt).dump();
        out.append(kMagic.data(), kMagic.size());
        put_le<std::uint64_t>(out, h.size());
        out += h;
        for (double v : ckpt.params.theta) put_le<double>(out, v);
    }
    write_all(path, out);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    const std::string data = read_all(path);
    const std::string where = path.string();
    try {
        if (data.size() >= kMagic.size() && std::equal(kMagic.begin(), kMagic.end(), data.begin())) {
            if (data.size() < kMagic.size() + 8) throw IoError(where + ": truncated header");
            const auto hlen = get_le<std::uint64_t>(data.data() + kMagic.size());
            const std::size_t body = kMagic.size() + 8 + hlen;
            if (hlen > data.size() || body > data.size()) throw IoError(where + ": truncated header");
            Checkpoint c = from_header(Json::parse(data.substr(kMagic.size() + 8, hlen)), where);
            if (data.size() != body + c.params.theta.size() * sizeof(double)) {
                throw IoError(where + ": payload size does not match the header");
            }
            for (std::size_t i = 0; i < c.params.theta.size(); ++i) {
                c.params.theta[i] = get_le<double>(data.data() + body + i * sizeof(double));
            }
            return c;
        }
        const Json doc = Json::parse(data);
        Checkpoint c = from_header(doc, where);
        const auto& theta = doc.at("theta");
        if (!theta.is_array() || theta.size() != c.params.theta.size()) {
            throw IoError(where + ": theta length does not match the header");
        }
        for (std::size_t i = 0; i < theta.size(); ++i) c.params.theta[i] = theta[i].get<double>();
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw IoError(where + ": malformed checkpoint (" + e.what() + ")");
    } catch (const ConfigError& e) {
        throw IoError(std::string("malformed checkpoint: ") + e.what());
    }
}

} // namespace tenevo
