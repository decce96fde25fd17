#include "efdls/wire.hpp"

#include "efdls/errors.hpp"

#include <bit>
#include <cstring>
#include <limits>

namespace efdls {

namespace {

constexpr std::uint8_t kMagic[4] = {'E', 'F', 'D', 'L'};
constexpr std::uint8_t kMaxDims = 8;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_f32(std::vector<std::uint8_t>& out, float f) { put_u32(out, std::bit_cast<std::uint32_t>(f)); }

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    std::size_t offset() const { return pos_; }
    std::size_t remaining() const { return bytes_.size() - pos_; }

    void need(std::size_t n, const char* what) const {
        if (remaining() < n) {
            throw MalformedMessageError(std::string("truncated message: expected ") + what, pos_);
        }
    }
    std::uint8_t u8(const char* what) {
        need(1, what);
        return bytes_[pos_++];
    }
    std::uint32_t u32(const char* what) {
        need(4, what);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
        pos_ += 4;
        return v;
    }
    float f32() { return std::bit_cast<float>(u32("tensor values")); }

private:
    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

}  // namespace

std::size_t encoded_size(const WeightBundle& bundle) {
    std::size_t n = kWireHeaderSize;
    for (const auto& e : bundle.entries) n += 2 + 4 * e.value.rank() + 4 * e.value.size();
    return n;
}

std::vector<std::uint8_t> encode_weight_message(const WeightBundle& bundle, std::uint32_t epoch,
                                                std::uint32_t user_id) {
    if (bundle.entries.size() > std::numeric_limits<std::uint8_t>::max()) {
        throw DimensionError("bundle has " + std::to_string(bundle.entries.size()) + " tensors, at most 255 fit");
    }
    std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
    out.reserve(encoded_size(bundle));
    out.push_back(kWireVersion);
    put_u32(out, epoch);
    put_u32(out, user_id);
    out.push_back(static_cast<std::uint8_t>(bundle.entries.size()));
    for (const auto& e : bundle.entries) {
        const Shape& shape = e.value.shape();
        if (shape.size() > kMaxDims) throw DimensionError("tensor rank " + std::to_string(shape.size()) + " too large");
        out.push_back(e.tag());
        out.push_back(static_cast<std::uint8_t>(shape.size()));
        for (std::size_t d : shape) {
            if (d > std::numeric_limits<std::uint32_t>::max()) throw DimensionError("tensor dim exceeds 2^32-1");
            put_u32(out, static_cast<std::uint32_t>(d));
        }
        for (double v : e.value.values()) put_f32(out, static_cast<float>(v));
    }
    return out;
}

DecodedMessage decode_weight_message(std::span<const std::uint8_t> bytes) {
    Reader r(bytes);
    r.need(4, "magic");
    if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw MalformedMessageError("bad magic", 0);
    r.u32("magic");
    const std::size_t version_at = r.offset();
    const std::uint8_t version = r.u8("version");
    if (version != kWireVersion) {
        throw MalformedMessageError("unsupported version " + std::to_string(version), version_at);
    }
    DecodedMessage msg;
    msg.epoch = r.u32("epoch");
    msg.user_id = r.u32("user id");
    const std::uint8_t count = r.u8("tensor count");
    msg.bundle.epoch = msg.epoch;
    msg.bundle.entries.reserve(count);
    for (std::uint8_t t = 0; t < count; ++t) {
        const std::size_t tag_at = r.offset();
        const std::uint8_t tag = r.u8("tensor tag");
        const std::uint8_t block = tag >> 4;
        const std::uint8_t kind = tag & 0x0F;
        if (block < 1 || block > 4 || kind > static_cast<std::uint8_t>(TensorKind::DenseBias)) {
            throw MalformedMessageError("invalid tensor tag " + std::to_string(tag), tag_at);
        }
        const std::size_t ndims_at = r.offset();
        const std::uint8_t ndims = r.u8("dim count");
        if (ndims == 0 || ndims > kMaxDims) {
            throw MalformedMessageError("invalid dim count " + std::to_string(ndims), ndims_at);
        }
        Shape shape(ndims);
        std::size_t volume = 1;
        for (auto& d : shape) {
            d = r.u32("tensor dim");
            if (d != 0 && volume > std::numeric_limits<std::size_t>::max() / d) {
                throw MalformedMessageError("tensor volume overflows", r.offset() - 4);
            }
            volume *= d;
        }
        if (volume > r.remaining() / 4) {
            throw MalformedMessageError("truncated message: tensor payload of " + std::to_string(volume) +
                                            " floats exceeds remaining bytes",
                                        r.offset());
        }
        std::vector<double> values(volume);
        for (auto& v : values) v = static_cast<double>(r.f32());
        msg.bundle.entries.push_back({block, static_cast<TensorKind>(kind), Tensor(std::move(shape), std::move(values))});
    }
    if (r.remaining() != 0) {
        throw MalformedMessageError(std::to_string(r.remaining()) + " trailing bytes after message", r.offset());
    }
    return msg;
}

void append_frame(std::vector<std::uint8_t>& out, std::span<const std::uint8_t> payload) {
    if (payload.size() > std::numeric_limits<std::uint32_t>::max()) throw DimensionError("frame too large");
    put_u32(out, static_cast<std::uint32_t>(payload.size()));
    out.insert(out.end(), payload.begin(), payload.end());
}

std::vector<std::uint8_t> make_frame(std::span<const std::uint8_t> payload) {
    std::vector<std::uint8_t> out;
    out.reserve(payload.size() + 4);
    append_frame(out, payload);
    return out;
}

}  // namespace efdls
