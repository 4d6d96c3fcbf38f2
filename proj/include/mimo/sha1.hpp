#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace mimo {

/// Plain SHA-1 over a byte string, hex-encoded. Used for content hashes in
/// run manifests; not a security boundary.
inline std::string sha1_hex(std::string_view data) {
    std::uint32_t h[5] = {0x67452301u, 0xEFCDAB89u, 0x98BADCFEu, 0x10325476u, 0xC3D2E1F0u};

    std::string msg(data);
    const std::uint64_t bit_len = static_cast<std::uint64_t>(data.size()) * 8u;
    msg.push_back(static_cast<char>(0x80));
    while (msg.size() % 64 != 56) msg.push_back('\0');
    for (int i = 7; i >= 0; --i) msg.push_back(static_cast<char>((bit_len >> (8 * i)) & 0xFF));

    const auto rotl = [](std::uint32_t x, int k) { return (x << k) | (x >> (32 - k)); };
    std::uint32_t w[80];
    for (std::size_t chunk = 0; chunk < msg.size(); chunk += 64) {
        for (int i = 0; i < 16; ++i) {
            const auto* p = reinterpret_cast<const unsigned char*>(msg.data() + chunk + i * 4);
            w[i] = (std::uint32_t(p[0]) << 24) | (std::uint32_t(p[1]) << 16) |
                   (std::uint32_t(p[2]) << 8) | std::uint32_t(p[3]);
        }
        for (int i = 16; i < 80; ++i) w[i] = rotl(w[i - 3] ^ w[i - 8] ^ w[i - 14] ^ w[i - 16], 1);

        std::uint32_t a = h[0], b = h[1], c = h[2], d = h[3], e = h[4];
        for (int i = 0; i < 80; ++i) {
            std::uint32_t f, k;
            if (i < 20) {
                f = (b & c) | (~b & d);
                k = 0x5A827999u;
            } else if (i < 40) {
                f = b ^ c ^ d;
                k = 0x6ED9EBA1u;
            } else if (i < 60) {
                f = (b & c) | (b & d) | (c & d);
                k = 0x8F1BBCDCu;
            } else {
                f = b ^ c ^ d;
                k = 0xCA62C1D6u;
            }
            const std::uint32_t temp = rotl(a, 5) + f + e + k + w[i];
            e = d;
            d = c;
            c = rotl(b, 30);
            b = a;
            a = temp;
        }
        h[0] += a;
        h[1] += b;
        h[2] += c;
        h[3] += d;
        h[4] += e;
    }

    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(40);
    for (const auto word : h)
        for (int i = 7; i >= 0; --i) out.push_back(hex[(word >> (4 * i)) & 0xF]);
    return out;
}

/// Git-style blob hash: sha1("blob <len>\0<content>").
inline std::string git_blob_sha1_hex(std::string_view content) {
    std::string buffer = "blob " + std::to_string(content.size());
    buffer.push_back('\0');
    buffer.append(content);
    return sha1_hex(buffer);
}

}  // namespace mimo
