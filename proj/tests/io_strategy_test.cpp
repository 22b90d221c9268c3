#include "quackstore/engine.hpp"

#include <gtest/gtest.h>

#include <random>

namespace quackstore {
namespace {

LatencyModel QuietLatency(uint64_t seed = 1) {
	LatencyModel m;
	m.jitter_range_ns = 0;
	m.rng_seed = seed;
	return m;
}

DmaBuffer BlockPayload(uint64_t seed) {
	DmaBuffer buf(kDataBlockSize, 512);
	uint64_t x = seed;
	for (uint64_t i = 0; i < buf.size(); i += 8) {
		x = SplitMix64(x);
		StoreLE64(buf.data() + i, x);
	}
	return buf;
}

EngineConfig MemoryEngineConfig(StrategyKind kind, uint64_t seed = 1) {
	EngineConfig config;
	config.latency = QuietLatency(seed);
	config.strategy.kind = kind;
	config.strategy.pool_size = 4;
	config.workers = 4;
	return config;
}

TEST(StrategyNameTest, RoundTripAndErrors) {
	for (StrategyKind kind :
	     {StrategyKind::FileBaseline, StrategyKind::SyncDirect, StrategyKind::AsyncSingleQueue,
	      StrategyKind::AsyncQueuePool, StrategyKind::AsyncThreadQueues}) {
		EXPECT_EQ(ParseStrategyName(StrategyName(kind)), kind);
	}
	EXPECT_THROW(ParseStrategyName("io_uring"), IoError);
}

TEST(StrategyRoundTripTest, EveryStrategyWritesWhatSyncReads) {
	for (StrategyKind kind :
	     {StrategyKind::FileBaseline, StrategyKind::SyncDirect, StrategyKind::AsyncSingleQueue,
	      StrategyKind::AsyncQueuePool, StrategyKind::AsyncThreadQueues}) {
		Engine engine(MemoryEngineConfig(kind));
		engine.Format();
		uint64_t id = engine.manager().AllocateBlock();
		DmaBuffer payload = BlockPayload(123);
		engine.RunSingle(
		    [&](SimContext &ctx) { engine.strategy().WriteBlock(ctx, id, payload); });

		// read back through the engine's own strategy
		DmaBuffer via_strategy(kDataBlockSize, 512);
		engine.RunSingle(
		    [&](SimContext &ctx) { engine.strategy().ReadBlock(ctx, id, via_strategy); });
		EXPECT_EQ(std::memcmp(via_strategy.data(), payload.data(), kDataBlockSize), 0)
		    << StrategyName(kind);

		// and, for device-backed strategies, through raw sync commands
		if (engine.device()) {
			StrategyConfig sync_cfg;
			sync_cfg.kind = StrategyKind::SyncDirect;
			SyncDirectStrategy sync_reader(*engine.device(), sync_cfg);
			DmaBuffer via_sync(kDataBlockSize, 512);
			SimContext ctx;
			sync_reader.ReadBlock(ctx, id, via_sync);
			EXPECT_EQ(std::memcmp(via_sync.data(), payload.data(), kDataBlockSize), 0)
			    << StrategyName(kind);
			EXPECT_EQ(engine.device()->AccessViolationCount(), 0u);
		}
	}
}

TEST(CommandCountTest, DataBlockIsExactlyTwoFullMdtsCommands) {
	for (StrategyKind kind : {StrategyKind::SyncDirect, StrategyKind::AsyncSingleQueue,
	                          StrategyKind::AsyncQueuePool, StrategyKind::AsyncThreadQueues}) {
		Engine engine(MemoryEngineConfig(kind));
		engine.Format();
		uint64_t id = engine.manager().AllocateBlock();
		DmaBuffer payload = BlockPayload(5);
		engine.device()->ClearCommandLog();
		engine.RunSingle(
		    [&](SimContext &ctx) { engine.strategy().WriteBlock(ctx, id, payload); });
		int writes = 0;
		for (const auto &entry : engine.device()->CommandLog()) {
			if ((entry.event == LogEvent::Submit || entry.event == LogEvent::SyncCommand) &&
			    entry.opcode == Opcode::Write) {
				writes++;
				EXPECT_EQ(entry.lba_count, 256u) << StrategyName(kind);
			}
		}
		EXPECT_EQ(writes, 2) << StrategyName(kind);
	}
}

TEST(CommandCountTest, HeaderWriteIsOneCommand) {
	Engine engine(MemoryEngineConfig(StrategyKind::AsyncThreadQueues));
	engine.Format();
	engine.device()->ClearCommandLog();
	DmaBuffer header(kHeaderBlockSize, 512);
	engine.RunSingle(
	    [&](SimContext &ctx) { engine.strategy().WriteRange(ctx, 0, kHeaderBlockSize, header); });
	int writes = 0;
	for (const auto &entry : engine.device()->CommandLog()) {
		if (entry.event == LogEvent::Submit && entry.opcode == Opcode::Write) {
			writes++;
			EXPECT_EQ(entry.lba_count, 8u); // 4096 B / 512 B
		}
	}
	EXPECT_EQ(writes, 1);
}

TEST(QueueWrapperTest, InflightFollowsSubmitAndDrain) {
	auto device = Device::OpenMemory(1 << 20, DeviceGeometry {}, QuietLatency());
	QueueWrapper wrapper(*device, 8, Micros(2));
	SimContext ctx;
	DmaBuffer buf(512, 512);
	NvmeCommand cmd;
	cmd.opcode = Opcode::Write;
	cmd.start_lba = 0;
	cmd.lba_count = 1;
	cmd.buffer = &buf;
	EXPECT_EQ(wrapper.inflight(), 0u);
	wrapper.Submit(ctx, cmd);
	EXPECT_EQ(wrapper.inflight(), 1u);
	wrapper.Drain(ctx);
	EXPECT_EQ(wrapper.inflight(), 0u);
	SimContext teardown;
	wrapper.Acquire(teardown);
	wrapper.queue().Terminate(teardown);
	wrapper.Release(teardown);
}

TEST(QueueWrapperTest, FullQueueIsAbsorbedByPokeAndRetry) {
	auto device = Device::OpenMemory(1 << 20, DeviceGeometry {}, QuietLatency());
	QueueWrapper wrapper(*device, 2, Micros(2));
	SimContext ctx;
	DmaBuffer buf(512, 512);
	for (uint64_t i = 0; i < 9; i++) {
		NvmeCommand cmd;
		cmd.opcode = Opcode::Write;
		cmd.start_lba = i;
		cmd.lba_count = 1;
		cmd.buffer = &buf;
		wrapper.Submit(ctx, cmd); // depth 2: submissions past 2 poke and retry
	}
	wrapper.Drain(ctx);
	EXPECT_EQ(wrapper.inflight(), 0u);
	EXPECT_EQ(device->AccessViolationCount(), 0u);
}

TEST(QueueWrapperTest, TwoThreadsThousandCommandsEachConserveCompletions) {
	auto device = Device::OpenMemory(1 << 20, DeviceGeometry {}, QuietLatency());
	QueueWrapper wrapper(*device, 32, Micros(2));
	auto hammer = [&](uint32_t actor) {
		SimContext ctx;
		ctx.actor_id = actor;
		DmaBuffer buf(512, 512);
		for (int i = 0; i < 1000; i++) {
			NvmeCommand cmd;
			cmd.opcode = Opcode::Write;
			cmd.start_lba = (actor * 1000 + i) % 1000;
			cmd.lba_count = 1;
			cmd.buffer = &buf;
			wrapper.Submit(ctx, cmd);
		}
	};
	std::thread a(hammer, 1);
	std::thread b(hammer, 2);
	a.join();
	b.join();
	SimContext ctx;
	wrapper.Drain(ctx);
	EXPECT_EQ(wrapper.inflight(), 0u);
	EXPECT_EQ(wrapper.queue().outstanding(), 0u);
	int delivered = 0;
	int submitted = 0;
	for (const auto &entry : device->CommandLog()) {
		if (entry.event == LogEvent::Submit) {
			submitted++;
		}
		if (entry.event == LogEvent::Deliver) {
			delivered++;
		}
	}
	EXPECT_EQ(submitted, 2000);
	EXPECT_EQ(delivered, 2000);
	EXPECT_EQ(device->AccessViolationCount(), 0u);
}

TEST(QueuePoolTest, IdlePoolPicksIndexZero) {
	auto device = Device::OpenMemory(1 << 20, DeviceGeometry {}, QuietLatency());
	StrategyConfig cfg;
	cfg.kind = StrategyKind::AsyncQueuePool;
	AsyncQueuePoolStrategy pool(*device, cfg, 4);
	SimContext ctx;
	DmaBuffer buf(512, 512);
	NvmeCommand cmd;
	cmd.opcode = Opcode::Write;
	cmd.start_lba = 0;
	cmd.lba_count = 1;
	cmd.buffer = &buf;
	EXPECT_EQ(pool.PoolSubmit(ctx, cmd), 0u);
	pool.Flush(ctx);
	pool.Shutdown(ctx);
}

TEST(QueuePoolTest, LockedWrapperIsSkipped) {
	auto device = Device::OpenMemory(1 << 20, DeviceGeometry {}, QuietLatency());
	StrategyConfig cfg;
	cfg.kind = StrategyKind::AsyncQueuePool;
	AsyncQueuePoolStrategy pool(*device, cfg, 4);

	// another thread holds wrapper 0 across our submission
	std::mutex hold;
	std::condition_variable cv;
	bool acquired = false, release = false;
	std::thread holder([&] {
		SimContext holder_ctx;
		holder_ctx.actor_id = 2;
		pool.wrapper(0).Acquire(holder_ctx);
		{
			std::lock_guard<std::mutex> g(hold);
			acquired = true;
		}
		cv.notify_all();
		{
			std::unique_lock<std::mutex> g(hold);
			cv.wait(g, [&] { return release; });
		}
		pool.wrapper(0).Release(holder_ctx);
	});
	{
		std::unique_lock<std::mutex> g(hold);
		cv.wait(g, [&] { return acquired; });
	}
	SimContext ctx;
	DmaBuffer buf(512, 512);
	NvmeCommand cmd;
	cmd.opcode = Opcode::Write;
	cmd.start_lba = 1;
	cmd.lba_count = 1;
	cmd.buffer = &buf;
	EXPECT_EQ(pool.PoolSubmit(ctx, cmd), 1u);
	{
		std::lock_guard<std::mutex> g(hold);
		release = true;
	}
	cv.notify_all();
	holder.join();
	SimContext teardown;
	pool.Flush(teardown);
	pool.Shutdown(teardown);
	EXPECT_EQ(device->AccessViolationCount(), 0u);
}

TEST(QueuePoolTest, SaturatedPoolWaitsForCapacity) {
	auto device = Device::OpenMemory(1 << 20, DeviceGeometry {}, QuietLatency());
	StrategyConfig cfg;
	cfg.kind = StrategyKind::AsyncQueuePool;
	cfg.queue_depth = 1;
	AsyncQueuePoolStrategy pool(*device, cfg, 2);
	SimContext ctx;
	DmaBuffer buf(512, 512);
	for (uint64_t i = 0; i < 7; i++) {
		NvmeCommand cmd;
		cmd.opcode = Opcode::Write;
		cmd.start_lba = i;
		cmd.lba_count = 1;
		cmd.buffer = &buf;
		size_t idx = pool.PoolSubmit(ctx, cmd); // must terminate even when all full
		EXPECT_LT(idx, 2u);
	}
	pool.Flush(ctx);
	int delivered = 0;
	for (const auto &entry : device->CommandLog()) {
		if (entry.event == LogEvent::Deliver) {
			delivered++;
		}
	}
	EXPECT_EQ(delivered, 7);
	pool.Shutdown(ctx);
}

TEST(ThreadQueuesTest, EachWorkerOwnsADistinctQueue) {
	auto device = Device::OpenMemory(1 << 20, DeviceGeometry {}, QuietLatency());
	StrategyConfig cfg;
	cfg.kind = StrategyKind::AsyncThreadQueues;
	AsyncThreadQueuesStrategy strategy(*device, cfg);

	std::vector<uint64_t> queues(8, 0);
	std::vector<std::thread> workers;
	for (uint32_t i = 0; i < 8; i++) {
		workers.emplace_back([&, i] {
			SimContext ctx;
			ctx.actor_id = i + 1;
			strategy.BeginWorker(ctx, i);
			CommandQueue *first = &strategy.ThreadQueue();
			CommandQueue *second = &strategy.ThreadQueue();
			EXPECT_EQ(first, second); // same thread, same queue identity
			queues[i] = first->id();
			DmaBuffer buf(512, 512);
			NvmeCommand cmd;
			cmd.opcode = Opcode::Write;
			cmd.start_lba = i;
			cmd.lba_count = 1;
			cmd.buffer = &buf;
			SubmitWithRetry(ctx, *first, cmd);
			strategy.EndWorker(ctx);
		});
	}
	for (auto &w : workers) {
		w.join();
	}
	std::set<uint64_t> distinct(queues.begin(), queues.end());
	EXPECT_EQ(distinct.size(), 8u);
	EXPECT_EQ(device->AccessViolationCount(), 0u);
	// non-worker thread has no queue
	EXPECT_THROW(strategy.ThreadQueue(), ContractViolation);
}

TEST(DrainFlagTest, OnlyAsyncStrategiesToggle) {
	Engine sync_engine(MemoryEngineConfig(StrategyKind::SyncDirect));
	EXPECT_THROW(sync_engine.strategy().SetDrainAfterBlock(false), ContractViolation);
	Engine file_engine(MemoryEngineConfig(StrategyKind::FileBaseline));
	EXPECT_THROW(file_engine.strategy().SetDrainAfterBlock(false), ContractViolation);
	Engine pool_engine(MemoryEngineConfig(StrategyKind::AsyncQueuePool));
	EXPECT_NO_THROW(pool_engine.strategy().SetDrainAfterBlock(false));
}

TEST(DrainFlagTest, DrainedWritesAreVisibleImmediatelyAfterReturn) {
	LatencyModel lat;
	lat.jitter_range_ns = Micros(80);
	lat.rng_seed = 7;
	EngineConfig config = MemoryEngineConfig(StrategyKind::AsyncQueuePool);
	config.latency = lat;
	Engine engine(config);
	engine.Format();
	std::mt19937_64 rng(13);
	uint64_t id = engine.manager().AllocateBlock();
	StrategyConfig sync_cfg;
	sync_cfg.kind = StrategyKind::SyncDirect;
	SyncDirectStrategy sync_reader(*engine.device(), sync_cfg);
	for (int iter = 0; iter < 20; iter++) {
		DmaBuffer payload = BlockPayload(rng());
		engine.RunSingle([&](SimContext &ctx) {
			engine.strategy().WriteBlock(ctx, id, payload);
			// drain-after-block: the transfer is complete when WriteBlock returns
			DmaBuffer check(kDataBlockSize, 512);
			sync_reader.ReadBlock(ctx, id, check);
			ASSERT_EQ(std::memcmp(check.data(), payload.data(), kDataBlockSize), 0);
		});
	}
}

TEST(DrainFlagTest, NoDrainWithJitterCanInvertDependentWrites) {
	bool found_inversion = false;
	for (uint64_t seed = 0; seed < 100 && !found_inversion; seed++) {
		LatencyModel lat;
		lat.jitter_range_ns = Micros(100);
		lat.rng_seed = seed;
		EngineConfig config = MemoryEngineConfig(StrategyKind::AsyncQueuePool, seed);
		config.latency = lat;
		config.strategy.drain_after_block = false;
		Engine engine(config);
		engine.Format();
		uint64_t id = engine.manager().AllocateBlock();
		DmaBuffer v1 = BlockPayload(1);
		DmaBuffer v2 = BlockPayload(2);
		engine.RunSingle([&](SimContext &ctx) {
			engine.strategy().WriteBlock(ctx, id, v1);
			engine.strategy().WriteBlock(ctx, id, v2);
		});
		SimContext ctx;
		engine.strategy().Flush(ctx);
		StrategyConfig sync_cfg;
		sync_cfg.kind = StrategyKind::SyncDirect;
		SyncDirectStrategy sync_reader(*engine.device(), sync_cfg);
		DmaBuffer got(kDataBlockSize, 512);
		sync_reader.ReadBlock(ctx, id, got);
		if (std::memcmp(got.data(), v2.data(), kDataBlockSize) != 0) {
			found_inversion = true;
		}
	}
	EXPECT_TRUE(found_inversion);
}

TEST(DrainFlagTest, NoDrainZeroJitterStaysConsistent) {
	EngineConfig config = MemoryEngineConfig(StrategyKind::AsyncQueuePool);
	config.strategy.drain_after_block = false;
	Engine engine(config);
	engine.Format();
	uint64_t id = engine.manager().AllocateBlock();
	DmaBuffer v1 = BlockPayload(1);
	DmaBuffer v2 = BlockPayload(2);
	engine.RunSingle([&](SimContext &ctx) {
		engine.strategy().WriteBlock(ctx, id, v1);
		engine.strategy().WriteBlock(ctx, id, v2);
	});
	SimContext ctx;
	engine.strategy().Flush(ctx);
	StrategyConfig sync_cfg;
	sync_cfg.kind = StrategyKind::SyncDirect;
	SyncDirectStrategy sync_reader(*engine.device(), sync_cfg);
	DmaBuffer got(kDataBlockSize, 512);
	sync_reader.ReadBlock(ctx, id, got);
	EXPECT_EQ(std::memcmp(got.data(), v2.data(), kDataBlockSize), 0);
}

TEST(FileBaselineTest, SparseReadsComeBackZeroFilled) {
	Engine engine(MemoryEngineConfig(StrategyKind::FileBaseline));
	engine.Format();
	uint64_t id = engine.manager().AllocateBlock();
	DmaBuffer buf(kDataBlockSize, 512);
	std::memset(buf.data(), 0xab, buf.size());
	engine.RunSingle([&](SimContext &ctx) { engine.strategy().ReadBlock(ctx, id, buf); });
	for (uint64_t i = 0; i < buf.size(); i++) {
		ASSERT_EQ(buf.data()[i], 0) << "byte " << i;
	}
}

TEST(FileBaselineTest, ErrorsSurfaceAsIoError) {
	Engine engine(MemoryEngineConfig(StrategyKind::FileBaseline));
	engine.Format();
	DmaBuffer buf(kDataBlockSize, 512);
	SimContext ctx;
	EXPECT_THROW(engine.strategy().ReadRange(ctx, engine.geometry().CapacityBytes(), 512, buf),
	             ContractViolation);
}

TEST(StrategyContractTest, BlockBufferMustBeExactlyOneBlock) {
	Engine engine(MemoryEngineConfig(StrategyKind::SyncDirect));
	engine.Format();
	DmaBuffer small(4096, 512);
	SimContext ctx;
	EXPECT_THROW(engine.strategy().WriteBlock(ctx, 0, small), ContractViolation);
}

TEST(StrategyContractTest, DeviceErrorsPropagate) {
	Engine engine(MemoryEngineConfig(StrategyKind::AsyncThreadQueues));
	engine.Format();
	uint64_t id = engine.manager().AllocateBlock();
	DmaBuffer payload = BlockPayload(3);
	engine.device()->FailAfterCommands(0);
	EXPECT_THROW(engine.RunSingle(
	                 [&](SimContext &ctx) { engine.strategy().WriteBlock(ctx, id, payload); }),
	             IoError);
	engine.device()->ClearFault();
}

} // namespace
} // namespace quackstore
