#include <cstring>
#include <fstream>

#include "dlc/train.hpp"

namespace dlc {

namespace {

constexpr char kMagic[8] = {'D', 'L', 'C', 'C', 'K', 'P', 'T', '1'};
constexpr std::uint32_t kVersion = 1;

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xff));
}

void put_f64(std::vector<std::uint8_t>& out, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    put_u64(out, bits);
}

void put_bytes(std::vector<std::uint8_t>& out, const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out.insert(out.end(), b, b + n);
}

struct Reader {
    const std::uint8_t* p;
    std::size_t left;

    std::uint64_t u64() {
        if (left < 8) throw CheckpointError("checkpoint: truncated");
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
        p += 8;
        left -= 8;
        return v;
    }
    double f64() {
        const std::uint64_t bits = u64();
        double v;
        std::memcpy(&v, &bits, sizeof v);
        return v;
    }
    std::string str() {
        const std::uint64_t n = u64();
        if (left < n) throw CheckpointError("checkpoint: truncated");
        std::string s(reinterpret_cast<const char*>(p), n);
        p += n;
        left -= n;
        return s;
    }
};

std::uint64_t fnv1a(const std::vector<std::uint8_t>& bytes, std::size_t begin, std::size_t end) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (std::size_t i = begin; i < end; ++i) {
        h ^= bytes[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

void append_body(std::vector<std::uint8_t>& out, const Checkpoint& ckpt) {
    put_u64(out, ckpt.epoch);
    put_u64(out, ckpt.aborted ? 1 : 0);
    for (std::uint64_t w : ckpt.order_rng_state) put_u64(out, w);
    for (std::uint64_t w : ckpt.omega_rng_state) put_u64(out, w);
    put_u64(out, ckpt.optimizer_state.size());
    for (double v : ckpt.optimizer_state) put_f64(out, v);
    put_u64(out, ckpt.params.size());
    for (std::size_t i = 0; i < ckpt.params.size(); ++i) {
        const std::string& name = ckpt.params.name(i);
        const Tensor& t = ckpt.params.tensor(i);
        put_u64(out, name.size());
        put_bytes(out, name.data(), name.size());
        put_u64(out, t.shape.size());
        for (std::size_t d : t.shape) put_u64(out, d);
        for (double v : t.data) put_f64(out, v);
    }
    put_u64(out, ckpt.history.size());
    for (const StepRecord& s : ckpt.history) {
        put_f64(out, s.base);
        put_f64(out, s.hinge_mean);
        put_f64(out, s.total);
    }
}

}  // namespace

std::vector<std::uint8_t> serialize_checkpoint_body(const Checkpoint& ckpt) {
    std::vector<std::uint8_t> out;
    append_body(out, ckpt);
    return out;
}

std::vector<std::uint8_t> serialize_checkpoint(const Checkpoint& ckpt) {
    std::vector<std::uint8_t> out;
    put_bytes(out, kMagic, sizeof kMagic);
    put_u64(out, kVersion);

    std::vector<std::uint8_t> payload;
    put_u64(payload, ckpt.config_echo.size());
    put_bytes(payload, ckpt.config_echo.data(), ckpt.config_echo.size());
    append_body(payload, ckpt);

    put_u64(out, payload.size());
    out.insert(out.end(), payload.begin(), payload.end());
    put_u64(out, fnv1a(payload, 0, payload.size()));
    return out;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
    const std::vector<std::uint8_t> bytes = serialize_checkpoint(ckpt);
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw ConfigError("cannot write checkpoint " + path.string());
    os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<long>(bytes.size()));
    if (!os) throw ConfigError("short write to " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw CheckpointError("cannot open checkpoint " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(is)),
                                    std::istreambuf_iterator<char>());

    if (bytes.size() < sizeof kMagic + 16 || std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0)
        throw CheckpointError("checkpoint: bad magic");
    Reader header{bytes.data() + sizeof kMagic, bytes.size() - sizeof kMagic};
    const std::uint64_t version = header.u64();
    if (version != kVersion)
        throw CheckpointError("checkpoint: version " + std::to_string(version) +
                              " unsupported (expected " + std::to_string(kVersion) + ")");
    const std::uint64_t payload_len = header.u64();
    const std::size_t payload_begin = sizeof kMagic + 16;
    if (bytes.size() < payload_begin + payload_len + 8)
        throw CheckpointError("checkpoint: truncated");
    Reader tail{bytes.data() + payload_begin + payload_len, 8};
    if (tail.u64() != fnv1a(bytes, payload_begin, payload_begin + payload_len))
        throw CheckpointError("checkpoint: checksum mismatch");

    Reader r{bytes.data() + payload_begin, payload_len};
    Checkpoint ckpt;
    ckpt.version = static_cast<std::uint32_t>(version);
    ckpt.config_echo = r.str();
    ckpt.epoch = r.u64();
    ckpt.aborted = r.u64() != 0;
    for (auto& w : ckpt.order_rng_state) w = r.u64();
    for (auto& w : ckpt.omega_rng_state) w = r.u64();
    const std::uint64_t n_opt = r.u64();
    ckpt.optimizer_state.resize(n_opt);
    for (auto& v : ckpt.optimizer_state) v = r.f64();
    const std::uint64_t n_params = r.u64();
    for (std::uint64_t i = 0; i < n_params; ++i) {
        std::string name = r.str();
        const std::uint64_t rank = r.u64();
        std::vector<std::size_t> shape(rank);
        for (auto& d : shape) d = r.u64();
        Tensor t(shape);
        for (double& v : t.data) v = r.f64();
        ckpt.params.add(std::move(name), std::move(t));
    }
    const std::uint64_t n_steps = r.u64();
    ckpt.history.resize(n_steps);
    for (auto& s : ckpt.history) {
        s.base = r.f64();
        s.hinge_mean = r.f64();
        s.total = r.f64();
    }
    return ckpt;
}

}  // namespace dlc
