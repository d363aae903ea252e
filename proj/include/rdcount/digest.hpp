#pragma once

#include <cstddef>
#include <cstdint>
#include <cstring>
#include <string_view>
#include <type_traits>

namespace rdcount {

/** @brief Incremental FNV-1a 64-bit digest.
 *
 *  Used for artifact integrity (datasets, checkpoints), config fingerprints,
 *  and determinism tests. Not cryptographic; collision resistance is not a
 *  requirement here, tamper *detection* of accidental corruption is.
 */
class Fnv1a {
public:
    static constexpr std::uint64_t kOffset = 14695981039346656037ull;
    static constexpr std::uint64_t kPrime = 1099511628211ull;

    void update(const void* data, std::size_t n) {
        const auto* p = static_cast<const unsigned char*>(data);
        std::uint64_t h = hash_;
        for (std::size_t i = 0; i < n; ++i) {
            h ^= p[i];
            h *= kPrime;
        }
        hash_ = h;
    }

    /** @brief Hash the object representation of a trivially copyable value. */
    template <typename T>
    void update_value(const T& v) {
        static_assert(std::is_trivially_copyable_v<T>);
        update(&v, sizeof(T));
    }

    void update_string(std::string_view s) {
        const std::uint64_t n = s.size();
        update_value(n); // length prefix: "ab"+"c" != "a"+"bc"
        update(s.data(), s.size());
    }

    [[nodiscard]] std::uint64_t value() const { return hash_; }

private:
    std::uint64_t hash_ = kOffset;
};

inline std::uint64_t fnv1a(const void* data, std::size_t n) {
    Fnv1a d;
    d.update(data, n);
    return d.value();
}

inline std::uint64_t fnv1a(std::string_view s) {
    return fnv1a(s.data(), s.size());
}

} // namespace rdcount
