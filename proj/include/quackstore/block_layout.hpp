#pragma once

#include "quackstore/device.hpp"

#include <algorithm>
#include <mutex>
#include <set>
#include <vector>

namespace quackstore {

// DuckDB-style on-device layout: three 4096 B header slots at the front, then
// fixed 256 KB data blocks. The data region starts at the header region rounded
// up to the next MDTS boundary so every data block maps to whole-MDTS commands.
inline constexpr uint64_t kHeaderBlockSize = 4096;
inline constexpr uint64_t kHeaderSlotCount = 3;
inline constexpr uint64_t kDataBlockSize = 262144;
inline constexpr u8 kHeaderMagic[4] = {'D', 'U', 'C', 'K'};
inline constexpr u32 kFormatVersion = 1;

struct ChunkRange {
	uint64_t start_lba;
	uint64_t lba_count;

	bool operator==(const ChunkRange &) const = default;
};
using ChunkPlan = std::vector<ChunkRange>;

inline ChunkPlan MapRangeToCommands(uint64_t byte_offset, uint64_t length_bytes,
                                    const DeviceGeometry &geometry) {
	uint64_t lba_size = geometry.lba_size_bytes;
	if (length_bytes == 0) {
		throw ContractViolation("zero-length I/O rejected");
	}
	if (byte_offset % lba_size != 0 || length_bytes % lba_size != 0) {
		throw ContractViolation("offset and length must be multiples of the LBA size");
	}
	if (byte_offset + length_bytes > geometry.CapacityBytes()) {
		throw ContractViolation("range exceeds device capacity");
	}
	uint64_t mdts_lbas = geometry.MdtsLbas();
	ChunkPlan plan;
	uint64_t lba = byte_offset / lba_size;
	uint64_t remaining = length_bytes / lba_size;
	while (remaining > 0) {
		uint64_t count = std::min(mdts_lbas, remaining);
		plan.push_back(ChunkRange {lba, count});
		lba += count;
		remaining -= count;
	}
	return plan;
}

inline uint64_t DataRegionBase(const DeviceGeometry &geometry) {
	uint64_t header_bytes = kHeaderSlotCount * kHeaderBlockSize;
	uint64_t mdts = geometry.mdts_bytes;
	return (header_bytes + mdts - 1) / mdts * mdts;
}

inline uint64_t BlockOffset(uint64_t block_id, const DeviceGeometry &geometry) {
	uint64_t offset = DataRegionBase(geometry) + block_id * kDataBlockSize;
	if (offset + kDataBlockSize > geometry.CapacityBytes()) {
		throw ContractViolation("block " + std::to_string(block_id) + " is beyond device capacity");
	}
	return offset;
}

inline uint64_t UsableDataBlocks(const DeviceGeometry &geometry) {
	uint64_t base = DataRegionBase(geometry);
	uint64_t cap = geometry.CapacityBytes();
	return cap > base ? (cap - base) / kDataBlockSize : 0;
}

struct DatabaseHeader {
	u32 format_version = kFormatVersion;
	uint64_t max_block = 0;
	std::set<uint64_t> free_list;

	bool operator==(const DatabaseHeader &) const = default;
};

// Slot layout (little-endian): magic[4] "DUCK", u32 format_version, u64 max_block,
// u64 free_count, free_count x u64 block ids, u64 FNV-1a checksum over all
// preceding bytes. Must fit in one 4096 B header slot.
inline std::vector<u8> EncodeHeader(const DatabaseHeader &header) {
	size_t payload = 4 + 4 + 8 + 8 + header.free_list.size() * 8;
	size_t total = payload + 8;
	if (total > kHeaderBlockSize) {
		throw IoError("free list too large for a 4096 B header slot");
	}
	std::vector<u8> out(total, 0);
	std::memcpy(out.data(), kHeaderMagic, 4);
	StoreLE32(out.data() + 4, header.format_version);
	StoreLE64(out.data() + 8, header.max_block);
	StoreLE64(out.data() + 16, header.free_list.size());
	size_t pos = 24;
	for (uint64_t id : header.free_list) {
		StoreLE64(out.data() + pos, id);
		pos += 8;
	}
	StoreLE64(out.data() + pos, Fnv1a64(out.data(), payload));
	return out;
}

inline DatabaseHeader DecodeHeader(std::span<const u8> bytes) {
	if (bytes.size() < 32) {
		throw CorruptionError("header slot too short");
	}
	if (std::memcmp(bytes.data(), kHeaderMagic, 4) != 0) {
		throw CorruptionError("bad magic: not a quackstore image");
	}
	DatabaseHeader header;
	header.format_version = LoadLE32(bytes.data() + 4);
	header.max_block = LoadLE64(bytes.data() + 8);
	uint64_t free_count = LoadLE64(bytes.data() + 16);
	size_t payload = 24 + free_count * 8;
	if (payload + 8 > bytes.size()) {
		throw CorruptionError("header free list runs past the slot");
	}
	uint64_t want = LoadLE64(bytes.data() + payload);
	uint64_t got = Fnv1a64(bytes.data(), payload);
	if (want != got) {
		throw CorruptionError("header checksum mismatch");
	}
	for (uint64_t i = 0; i < free_count; i++) {
		uint64_t id = LoadLE64(bytes.data() + 24 + i * 8);
		if (id >= header.max_block) {
			throw CorruptionError("free list entry beyond max_block");
		}
		header.free_list.insert(id);
	}
	return header;
}

// Range-granular I/O contract implemented by every I/O strategy. Offsets and
// lengths are byte-addressed against the shared layout above.
class RangeIo {
public:
	virtual ~RangeIo() = default;
	virtual void ReadRange(SimContext &ctx, uint64_t byte_offset, uint64_t length,
	                       DmaBuffer &buffer) = 0;
	virtual void WriteRange(SimContext &ctx, uint64_t byte_offset, uint64_t length,
	                        DmaBuffer &buffer) = 0;
	// Drains every queue the implementation manages; a completion barrier.
	virtual void Flush(SimContext &ctx) = 0;
};

struct DirtyBlock {
	uint64_t block_id;
	DmaBuffer *payload;
};

// Block metadata: free list, modified set, max_block, all guarded by block_lock.
class BlockManager {
public:
	explicit BlockManager(DeviceGeometry geometry) : geometry_(geometry) {
	}

	const DeviceGeometry &geometry() const {
		return geometry_;
	}

	// Writes a fresh header into all three slots and resets the in-memory state.
	void Format(SimContext &ctx, RangeIo &io) {
		if (UsableDataBlocks(geometry_) == 0) {
			throw IoError("device too small: no room for data blocks after the header region");
		}
		std::lock_guard<std::mutex> guard(block_lock_);
		DatabaseHeader header;
		WriteHeaderSlotsLocked(ctx, io, header);
		max_block_ = 0;
		free_list_.clear();
		modified_blocks_.clear();
	}

	DatabaseHeader LoadHeader(SimContext &ctx, RangeIo &io) {
		std::lock_guard<std::mutex> guard(block_lock_);
		DmaBuffer buf(kHeaderBlockSize, geometry_.lba_size_bytes);
		io.ReadRange(ctx, 0, kHeaderBlockSize, buf);
		DatabaseHeader header = DecodeHeader(buf.Span());
		max_block_ = header.max_block;
		free_list_ = header.free_list;
		modified_blocks_.clear();
		return header;
	}

	uint64_t AllocateBlock() {
		std::lock_guard<std::mutex> guard(block_lock_);
		if (!free_list_.empty()) {
			uint64_t id = *free_list_.begin();
			free_list_.erase(free_list_.begin());
			return id;
		}
		if (max_block_ >= UsableDataBlocks(geometry_)) {
			throw IoError("device full: no free blocks");
		}
		return max_block_++;
	}

	void FreeBlock(uint64_t block_id) {
		std::lock_guard<std::mutex> guard(block_lock_);
		if (block_id >= max_block_) {
			throw ContractViolation("free_block: id " + std::to_string(block_id) +
			                        " is out of range");
		}
		if (free_list_.count(block_id)) {
			throw ContractViolation("double free of block " + std::to_string(block_id));
		}
		if (modified_blocks_.count(block_id)) {
			throw ContractViolation("free_block on a modified block; checkpoint first");
		}
		free_list_.insert(block_id);
	}

	void MarkModified(uint64_t block_id) {
		std::lock_guard<std::mutex> guard(block_lock_);
		if (block_id >= max_block_) {
			throw ContractViolation("mark_modified: id " + std::to_string(block_id) +
			                        " is out of range");
		}
		if (free_list_.count(block_id)) {
			throw ContractViolation("mark_modified on a free block");
		}
		modified_blocks_.insert(block_id);
	}

	// Writes dirty data blocks, drains them, then rewrites the header. The
	// in-memory state only changes after the header write succeeded, so an I/O
	// failure anywhere leaves the previous header (and this state) intact.
	void Checkpoint(SimContext &ctx, RangeIo &io, const std::vector<DirtyBlock> &dirty = {}) {
		std::lock_guard<std::mutex> guard(block_lock_);
		for (const DirtyBlock &d : dirty) {
			if (d.block_id >= max_block_) {
				throw ContractViolation("checkpoint: dirty block beyond max_block");
			}
			io.WriteRange(ctx, BlockOffset(d.block_id, geometry_), kDataBlockSize, *d.payload);
		}
		io.Flush(ctx);
		DatabaseHeader header;
		header.max_block = max_block_;
		header.free_list = free_list_;
		header.free_list.insert(modified_blocks_.begin(), modified_blocks_.end());
		WriteHeaderSlotsLocked(ctx, io, header);
		free_list_ = header.free_list;
		modified_blocks_.clear();
	}

	uint64_t max_block() const {
		std::lock_guard<std::mutex> guard(block_lock_);
		return max_block_;
	}
	std::set<uint64_t> free_list() const {
		std::lock_guard<std::mutex> guard(block_lock_);
		return free_list_;
	}
	std::set<uint64_t> modified_blocks() const {
		std::lock_guard<std::mutex> guard(block_lock_);
		return modified_blocks_;
	}

private:
	// Slot 0 is authoritative; slots 1-2 hold identical copies.
	void WriteHeaderSlotsLocked(SimContext &ctx, RangeIo &io, const DatabaseHeader &header) {
		std::vector<u8> encoded = EncodeHeader(header);
		DmaBuffer buf(kHeaderBlockSize, geometry_.lba_size_bytes);
		std::memcpy(buf.data(), encoded.data(), encoded.size());
		for (uint64_t slot = 0; slot < kHeaderSlotCount; slot++) {
			io.WriteRange(ctx, slot * kHeaderBlockSize, kHeaderBlockSize, buf);
		}
		io.Flush(ctx);
	}

	DeviceGeometry geometry_;
	mutable std::mutex block_lock_;
	std::set<uint64_t> free_list_;
	std::set<uint64_t> modified_blocks_;
	uint64_t max_block_ = 0;
};

} // namespace quackstore
