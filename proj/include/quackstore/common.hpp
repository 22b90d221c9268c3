#pragma once

#include <cstdint>
#include <cstring>
#include <span>
#include <stdexcept>
#include <string>

namespace quackstore {

using std::size_t;
using u8 = uint8_t;
using u32 = uint32_t;
using u64 = uint64_t;
using i64 = int64_t;

// All simulated time is kept in nanoseconds.
using sim_time_t = uint64_t;
inline constexpr sim_time_t kSimNever = UINT64_MAX;

inline constexpr sim_time_t Micros(uint64_t us) {
	return us * 1000;
}

class IoError : public std::runtime_error {
public:
	explicit IoError(const std::string &msg) : std::runtime_error(msg) {
	}
};

class ContractViolation : public std::logic_error {
public:
	explicit ContractViolation(const std::string &msg) : std::logic_error(msg) {
	}
};

class CorruptionError : public std::runtime_error {
public:
	explicit CorruptionError(const std::string &msg) : std::runtime_error(msg) {
	}
};

// Virtual clock carried by each acting thread (main thread, worker, test driver).
// Device operations advance it; the scheduler propagates it across task dependencies.
struct SimContext {
	sim_time_t now = 0;
	uint32_t actor_id = 0;

	void Advance(sim_time_t delta) {
		now += delta;
	}
	void AdvanceTo(sim_time_t t) {
		if (t > now) {
			now = t;
		}
	}
};

inline uint64_t SplitMix64(uint64_t x) {
	x += 0x9e3779b97f4a7c15ULL;
	x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
	x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
	return x ^ (x >> 31);
}

inline uint64_t HashCombine(uint64_t a, uint64_t b) {
	return SplitMix64(a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2)));
}

inline uint64_t Fnv1a64(const void *data, size_t len, uint64_t seed = 0xcbf29ce484222325ULL) {
	const u8 *bytes = static_cast<const u8 *>(data);
	uint64_t h = seed;
	for (size_t i = 0; i < len; i++) {
		h ^= bytes[i];
		h *= 0x100000001b3ULL;
	}
	return h;
}

// Little-endian scalar encoding for on-device structures.
inline void StoreLE32(u8 *dst, u32 v) {
	dst[0] = u8(v);
	dst[1] = u8(v >> 8);
	dst[2] = u8(v >> 16);
	dst[3] = u8(v >> 24);
}

inline void StoreLE64(u8 *dst, u64 v) {
	for (int i = 0; i < 8; i++) {
		dst[i] = u8(v >> (8 * i));
	}
}

inline u32 LoadLE32(const u8 *src) {
	return u32(src[0]) | u32(src[1]) << 8 | u32(src[2]) << 16 | u32(src[3]) << 24;
}

inline u64 LoadLE64(const u8 *src) {
	u64 v = 0;
	for (int i = 0; i < 8; i++) {
		v |= u64(src[i]) << (8 * i);
	}
	return v;
}

} // namespace quackstore
