#include "loratdma/phy.hpp"

#include <gtest/gtest.h>

#include <stdexcept>

using namespace loratdma;

namespace {

// Counts symbols block by block instead of using the closed-form ceil, in
// integer microseconds where the symbol time allows it.
double oracle_toa_ms(int payload, int sf, int bw, int cr, int preamble, bool explicit_header, bool crc, bool ldro)
{
    const int bits = 8 * payload - 4 * sf + 28 + (crc ? 16 : 0) - (explicit_header ? 0 : 20);
    const int bits_per_block = 4 * (sf - (ldro ? 2 : 0));
    int blocks = 0;
    while (blocks * bits_per_block < bits) {
        ++blocks;
    }
    const int payload_symbols = 8 + blocks * cr;
    const double ts_ms = 1000.0 * static_cast<double>(1 << sf) / bw;
    return (preamble + 4.25 + payload_symbols) * ts_ms;
}

phy::RadioParams sf(int spreading_factor)
{
    phy::RadioParams p;
    p.spreading_factor = spreading_factor;
    return p;
}

}  // namespace

TEST(Phy, SymbolTime)
{
    EXPECT_DOUBLE_EQ(phy::symbol_time(sf(9)).milliseconds(), 4.096);
    EXPECT_DOUBLE_EQ(phy::symbol_time(sf(7)).milliseconds(), 1.024);
    phy::RadioParams wide = sf(9);
    wide.bandwidth_hz = 250000;
    EXPECT_DOUBLE_EQ(phy::symbol_time(wide).milliseconds(), 2.048);
}

TEST(Phy, MeasuredAirtimes)
{
    EXPECT_NEAR(phy::time_on_air(3, sf(9)).milliseconds(), 103.4, 0.05);
    EXPECT_NEAR(phy::time_on_air(29, sf(9)).milliseconds(), 226.3, 0.05);
    EXPECT_NEAR(phy::lorawan_time_on_air(24, sf(9)).milliseconds(), 267.26, 0.05);
}

TEST(Phy, AirtimeGoldenValues)
{
    EXPECT_NEAR(phy::time_on_air(3, sf(9)).milliseconds(), 103.424, 1e-9);
    EXPECT_NEAR(phy::time_on_air(29, sf(9)).milliseconds(), 226.304, 1e-9);
    EXPECT_NEAR(phy::time_on_air(36, sf(9)).milliseconds(), 267.264, 1e-9);
    EXPECT_NEAR(phy::time_on_air(64, sf(9)).milliseconds(), 390.144, 1e-9);
    EXPECT_NEAR(phy::lorawan_time_on_air(0, sf(9)).milliseconds(), 144.384, 1e-9);
    EXPECT_NEAR(phy::lorawan_time_on_air(24, sf(7)).milliseconds(),
                oracle_toa_ms(36, 7, 125000, 5, 8, true, true, false), 1e-9);
}

TEST(Phy, MatchesOracleAcrossConfigurations)
{
    for (int s = 7; s <= 12; ++s) {
        for (int bw : {125000, 250000, 500000}) {
            for (int cr = 5; cr <= 8; ++cr) {
                for (int flags = 0; flags < 8; ++flags) {
                    phy::RadioParams p;
                    p.spreading_factor = s;
                    p.bandwidth_hz = bw;
                    p.coding_rate_denominator = cr;
                    p.explicit_header = (flags & 1) == 0;
                    p.crc_on = (flags & 2) == 0;
                    p.low_data_rate_opt = (flags & 4) != 0;
                    for (int pl : {0, 1, 3, 12, 29, 36, 64, 200, 255}) {
                        const double expected = oracle_toa_ms(pl, s, bw, cr, 8, p.explicit_header, p.crc_on,
                                                              p.low_data_rate_opt);
                        ASSERT_NEAR(phy::time_on_air(pl, p).milliseconds(), expected, 1e-6)
                            << "sf=" << s << " bw=" << bw << " cr=" << cr << " flags=" << flags << " pl=" << pl;
                    }
                }
            }
        }
    }
}

TEST(Phy, MonotoneAndStepped)
{
    const auto p = sf(9);
    double previous = 0.0;
    for (int pl = 0; pl <= phy::kMaxPhyPayloadBytes; ++pl) {
        const double t = phy::time_on_air(pl, p).seconds;
        ASSERT_GE(t, previous) << pl;
        if (t > previous && pl > 0) {
            // A step adds exactly one block of coding_rate_denominator symbols.
            EXPECT_NEAR(t - previous, p.coding_rate_denominator * phy::symbol_time(p).seconds, 1e-12) << pl;
        }
        previous = t;
    }
    EXPECT_EQ(phy::time_on_air(2, p), phy::time_on_air(3, p));
    EXPECT_EQ(phy::time_on_air(0, p), phy::time_on_air(3, p));
}

TEST(Phy, LoRaWanAddsOverhead)
{
    for (int pl = 0; pl + phy::kLoRaWanOverheadBytes <= phy::kMaxPhyPayloadBytes; pl += 7) {
        EXPECT_EQ(phy::lorawan_time_on_air(pl, sf(9)), phy::time_on_air(pl + 12, sf(9)));
    }
}

TEST(Phy, RejectsBadInput)
{
    EXPECT_THROW(phy::time_on_air(-1, sf(9)), std::out_of_range);
    EXPECT_THROW(phy::time_on_air(256, sf(9)), std::out_of_range);
    EXPECT_THROW(phy::lorawan_time_on_air(250, sf(9)), std::out_of_range);
    EXPECT_THROW(phy::validate(sf(6)), std::invalid_argument);
    EXPECT_THROW(phy::validate(sf(13)), std::invalid_argument);
    phy::RadioParams p;
    p.bandwidth_hz = 0;
    EXPECT_THROW(phy::validate(p), std::invalid_argument);
    p = {};
    p.preamble_symbols = 0;
    EXPECT_THROW(phy::validate(p), std::invalid_argument);
    p = {};
    p.coding_rate_denominator = 9;
    EXPECT_THROW(phy::validate(p), std::invalid_argument);
    EXPECT_NO_THROW(phy::validate(phy::RadioParams{}));
}

TEST(Phy, AirtimeNanoseconds)
{
    EXPECT_EQ(phy::time_on_air(3, sf(9)).nanoseconds(), 103424000);
    EXPECT_EQ(phy::to_string(phy::RadioState::Transmit), "tx");
}
