#include "unicode_fold.hpp"

#include <algorithm>
#include <array>
#include <utility>

namespace covex::text {

namespace {

// (code point, folded code point or 0 when it vanishes) for U+0080..U+052F,
// produced from Python's unicodedata as NFD(lower(c)) minus combining marks.
// Code points that fold to themselves are omitted.
constexpr std::pair<char32_t, char32_t> kFold[] = {
    {0xC0, 0x61}, {0xC1, 0x61}, {0xC2, 0x61}, {0xC3, 0x61}, {0xC4, 0x61}, {0xC5, 0x61},
    {0xC6, 0xE6}, {0xC7, 0x63}, {0xC8, 0x65}, {0xC9, 0x65}, {0xCA, 0x65}, {0xCB, 0x65},
    {0xCC, 0x69}, {0xCD, 0x69}, {0xCE, 0x69}, {0xCF, 0x69}, {0xD0, 0xF0}, {0xD1, 0x6E},
    {0xD2, 0x6F}, {0xD3, 0x6F}, {0xD4, 0x6F}, {0xD5, 0x6F}, {0xD6, 0x6F}, {0xD8, 0xF8},
    {0xD9, 0x75}, {0xDA, 0x75}, {0xDB, 0x75}, {0xDC, 0x75}, {0xDD, 0x79}, {0xDE, 0xFE},
    {0xE0, 0x61}, {0xE1, 0x61}, {0xE2, 0x61}, {0xE3, 0x61}, {0xE4, 0x61}, {0xE5, 0x61},
    {0xE7, 0x63}, {0xE8, 0x65}, {0xE9, 0x65}, {0xEA, 0x65}, {0xEB, 0x65}, {0xEC, 0x69},
    {0xED, 0x69}, {0xEE, 0x69}, {0xEF, 0x69}, {0xF1, 0x6E}, {0xF2, 0x6F}, {0xF3, 0x6F},
    {0xF4, 0x6F}, {0xF5, 0x6F}, {0xF6, 0x6F}, {0xF9, 0x75}, {0xFA, 0x75}, {0xFB, 0x75},
    {0xFC, 0x75}, {0xFD, 0x79}, {0xFF, 0x79}, {0x100, 0x61}, {0x101, 0x61}, {0x102, 0x61},
    {0x103, 0x61}, {0x104, 0x61}, {0x105, 0x61}, {0x106, 0x63}, {0x107, 0x63}, {0x108, 0x63},
    {0x109, 0x63}, {0x10A, 0x63}, {0x10B, 0x63}, {0x10C, 0x63}, {0x10D, 0x63}, {0x10E, 0x64},
    {0x10F, 0x64}, {0x110, 0x111}, {0x112, 0x65}, {0x113, 0x65}, {0x114, 0x65}, {0x115, 0x65},
    {0x116, 0x65}, {0x117, 0x65}, {0x118, 0x65}, {0x119, 0x65}, {0x11A, 0x65}, {0x11B, 0x65},
    {0x11C, 0x67}, {0x11D, 0x67}, {0x11E, 0x67}, {0x11F, 0x67}, {0x120, 0x67}, {0x121, 0x67},
    {0x122, 0x67}, {0x123, 0x67}, {0x124, 0x68}, {0x125, 0x68}, {0x126, 0x127}, {0x128, 0x69},
    {0x129, 0x69}, {0x12A, 0x69}, {0x12B, 0x69}, {0x12C, 0x69}, {0x12D, 0x69}, {0x12E, 0x69},
    {0x12F, 0x69}, {0x130, 0x69}, {0x132, 0x133}, {0x134, 0x6A}, {0x135, 0x6A}, {0x136, 0x6B},
    {0x137, 0x6B}, {0x139, 0x6C}, {0x13A, 0x6C}, {0x13B, 0x6C}, {0x13C, 0x6C}, {0x13D, 0x6C},
    {0x13E, 0x6C}, {0x13F, 0x140}, {0x141, 0x142}, {0x143, 0x6E}, {0x144, 0x6E}, {0x145, 0x6E},
    {0x146, 0x6E}, {0x147, 0x6E}, {0x148, 0x6E}, {0x14A, 0x14B}, {0x14C, 0x6F}, {0x14D, 0x6F},
    {0x14E, 0x6F}, {0x14F, 0x6F}, {0x150, 0x6F}, {0x151, 0x6F}, {0x152, 0x153}, {0x154, 0x72},
    {0x155, 0x72}, {0x156, 0x72}, {0x157, 0x72}, {0x158, 0x72}, {0x159, 0x72}, {0x15A, 0x73},
    {0x15B, 0x73}, {0x15C, 0x73}, {0x15D, 0x73}, {0x15E, 0x73}, {0x15F, 0x73}, {0x160, 0x73},
    {0x161, 0x73}, {0x162, 0x74}, {0x163, 0x74}, {0x164, 0x74}, {0x165, 0x74}, {0x166, 0x167},
    {0x168, 0x75}, {0x169, 0x75}, {0x16A, 0x75}, {0x16B, 0x75}, {0x16C, 0x75}, {0x16D, 0x75},
    {0x16E, 0x75}, {0x16F, 0x75}, {0x170, 0x75}, {0x171, 0x75}, {0x172, 0x75}, {0x173, 0x75},
    {0x174, 0x77}, {0x175, 0x77}, {0x176, 0x79}, {0x177, 0x79}, {0x178, 0x79}, {0x179, 0x7A},
    {0x17A, 0x7A}, {0x17B, 0x7A}, {0x17C, 0x7A}, {0x17D, 0x7A}, {0x17E, 0x7A}, {0x181, 0x253},
    {0x182, 0x183}, {0x184, 0x185}, {0x186, 0x254}, {0x187, 0x188}, {0x189, 0x256}, {0x18A, 0x257},
    {0x18B, 0x18C}, {0x18E, 0x1DD}, {0x18F, 0x259}, {0x190, 0x25B}, {0x191, 0x192}, {0x193, 0x260},
    {0x194, 0x263}, {0x196, 0x269}, {0x197, 0x268}, {0x198, 0x199}, {0x19C, 0x26F}, {0x19D, 0x272},
    {0x19F, 0x275}, {0x1A0, 0x6F}, {0x1A1, 0x6F}, {0x1A2, 0x1A3}, {0x1A4, 0x1A5}, {0x1A6, 0x280},
    {0x1A7, 0x1A8}, {0x1A9, 0x283}, {0x1AC, 0x1AD}, {0x1AE, 0x288}, {0x1AF, 0x75}, {0x1B0, 0x75},
    {0x1B1, 0x28A}, {0x1B2, 0x28B}, {0x1B3, 0x1B4}, {0x1B5, 0x1B6}, {0x1B7, 0x292}, {0x1B8, 0x1B9},
    {0x1BC, 0x1BD}, {0x1C4, 0x1C6}, {0x1C5, 0x1C6}, {0x1C7, 0x1C9}, {0x1C8, 0x1C9}, {0x1CA, 0x1CC},
    {0x1CB, 0x1CC}, {0x1CD, 0x61}, {0x1CE, 0x61}, {0x1CF, 0x69}, {0x1D0, 0x69}, {0x1D1, 0x6F},
    {0x1D2, 0x6F}, {0x1D3, 0x75}, {0x1D4, 0x75}, {0x1D5, 0x75}, {0x1D6, 0x75}, {0x1D7, 0x75},
    {0x1D8, 0x75}, {0x1D9, 0x75}, {0x1DA, 0x75}, {0x1DB, 0x75}, {0x1DC, 0x75}, {0x1DE, 0x61},
    {0x1DF, 0x61}, {0x1E0, 0x61}, {0x1E1, 0x61}, {0x1E2, 0xE6}, {0x1E3, 0xE6}, {0x1E4, 0x1E5},
    {0x1E6, 0x67}, {0x1E7, 0x67}, {0x1E8, 0x6B}, {0x1E9, 0x6B}, {0x1EA, 0x6F}, {0x1EB, 0x6F},
    {0x1EC, 0x6F}, {0x1ED, 0x6F}, {0x1EE, 0x292}, {0x1EF, 0x292}, {0x1F0, 0x6A}, {0x1F1, 0x1F3},
    {0x1F2, 0x1F3}, {0x1F4, 0x67}, {0x1F5, 0x67}, {0x1F6, 0x195}, {0x1F7, 0x1BF}, {0x1F8, 0x6E},
    {0x1F9, 0x6E}, {0x1FA, 0x61}, {0x1FB, 0x61}, {0x1FC, 0xE6}, {0x1FD, 0xE6}, {0x1FE, 0xF8},
    {0x1FF, 0xF8}, {0x200, 0x61}, {0x201, 0x61}, {0x202, 0x61}, {0x203, 0x61}, {0x204, 0x65},
    {0x205, 0x65}, {0x206, 0x65}, {0x207, 0x65}, {0x208, 0x69}, {0x209, 0x69}, {0x20A, 0x69},
    {0x20B, 0x69}, {0x20C, 0x6F}, {0x20D, 0x6F}, {0x20E, 0x6F}, {0x20F, 0x6F}, {0x210, 0x72},
    {0x211, 0x72}, {0x212, 0x72}, {0x213, 0x72}, {0x214, 0x75}, {0x215, 0x75}, {0x216, 0x75},
    {0x217, 0x75}, {0x218, 0x73}, {0x219, 0x73}, {0x21A, 0x74}, {0x21B, 0x74}, {0x21C, 0x21D},
    {0x21E, 0x68}, {0x21F, 0x68}, {0x220, 0x19E}, {0x222, 0x223}, {0x224, 0x225}, {0x226, 0x61},
    {0x227, 0x61}, {0x228, 0x65}, {0x229, 0x65}, {0x22A, 0x6F}, {0x22B, 0x6F}, {0x22C, 0x6F},
    {0x22D, 0x6F}, {0x22E, 0x6F}, {0x22F, 0x6F}, {0x230, 0x6F}, {0x231, 0x6F}, {0x232, 0x79},
    {0x233, 0x79}, {0x23A, 0x2C65}, {0x23B, 0x23C}, {0x23D, 0x19A}, {0x23E, 0x2C66}, {0x241, 0x242},
    {0x243, 0x180}, {0x244, 0x289}, {0x245, 0x28C}, {0x246, 0x247}, {0x248, 0x249}, {0x24A, 0x24B},
    {0x24C, 0x24D}, {0x24E, 0x24F}, {0x300, 0x0}, {0x301, 0x0}, {0x302, 0x0}, {0x303, 0x0},
    {0x304, 0x0}, {0x305, 0x0}, {0x306, 0x0}, {0x307, 0x0}, {0x308, 0x0}, {0x309, 0x0},
    {0x30A, 0x0}, {0x30B, 0x0}, {0x30C, 0x0}, {0x30D, 0x0}, {0x30E, 0x0}, {0x30F, 0x0},
    {0x310, 0x0}, {0x311, 0x0}, {0x312, 0x0}, {0x313, 0x0}, {0x314, 0x0}, {0x315, 0x0},
    {0x316, 0x0}, {0x317, 0x0}, {0x318, 0x0}, {0x319, 0x0}, {0x31A, 0x0}, {0x31B, 0x0},
    {0x31C, 0x0}, {0x31D, 0x0}, {0x31E, 0x0}, {0x31F, 0x0}, {0x320, 0x0}, {0x321, 0x0},
    {0x322, 0x0}, {0x323, 0x0}, {0x324, 0x0}, {0x325, 0x0}, {0x326, 0x0}, {0x327, 0x0},
    {0x328, 0x0}, {0x329, 0x0}, {0x32A, 0x0}, {0x32B, 0x0}, {0x32C, 0x0}, {0x32D, 0x0},
    {0x32E, 0x0}, {0x32F, 0x0}, {0x330, 0x0}, {0x331, 0x0}, {0x332, 0x0}, {0x333, 0x0},
    {0x334, 0x0}, {0x335, 0x0}, {0x336, 0x0}, {0x337, 0x0}, {0x338, 0x0}, {0x339, 0x0},
    {0x33A, 0x0}, {0x33B, 0x0}, {0x33C, 0x0}, {0x33D, 0x0}, {0x33E, 0x0}, {0x33F, 0x0},
    {0x340, 0x0}, {0x341, 0x0}, {0x342, 0x0}, {0x343, 0x0}, {0x344, 0x0}, {0x345, 0x0},
    {0x346, 0x0}, {0x347, 0x0}, {0x348, 0x0}, {0x349, 0x0}, {0x34A, 0x0}, {0x34B, 0x0},
    {0x34C, 0x0}, {0x34D, 0x0}, {0x34E, 0x0}, {0x34F, 0x0}, {0x350, 0x0}, {0x351, 0x0},
    {0x352, 0x0}, {0x353, 0x0}, {0x354, 0x0}, {0x355, 0x0}, {0x356, 0x0}, {0x357, 0x0},
    {0x358, 0x0}, {0x359, 0x0}, {0x35A, 0x0}, {0x35B, 0x0}, {0x35C, 0x0}, {0x35D, 0x0},
    {0x35E, 0x0}, {0x35F, 0x0}, {0x360, 0x0}, {0x361, 0x0}, {0x362, 0x0}, {0x363, 0x0},
    {0x364, 0x0}, {0x365, 0x0}, {0x366, 0x0}, {0x367, 0x0}, {0x368, 0x0}, {0x369, 0x0},
    {0x36A, 0x0}, {0x36B, 0x0}, {0x36C, 0x0}, {0x36D, 0x0}, {0x36E, 0x0}, {0x36F, 0x0},
    {0x370, 0x371}, {0x372, 0x373}, {0x374, 0x2B9}, {0x376, 0x377}, {0x37E, 0x3B}, {0x37F, 0x3F3},
    {0x385, 0xA8}, {0x386, 0x3B1}, {0x387, 0xB7}, {0x388, 0x3B5}, {0x389, 0x3B7}, {0x38A, 0x3B9},
    {0x38C, 0x3BF}, {0x38E, 0x3C5}, {0x38F, 0x3C9}, {0x390, 0x3B9}, {0x391, 0x3B1}, {0x392, 0x3B2},
    {0x393, 0x3B3}, {0x394, 0x3B4}, {0x395, 0x3B5}, {0x396, 0x3B6}, {0x397, 0x3B7}, {0x398, 0x3B8},
    {0x399, 0x3B9}, {0x39A, 0x3BA}, {0x39B, 0x3BB}, {0x39C, 0x3BC}, {0x39D, 0x3BD}, {0x39E, 0x3BE},
    {0x39F, 0x3BF}, {0x3A0, 0x3C0}, {0x3A1, 0x3C1}, {0x3A3, 0x3C3}, {0x3A4, 0x3C4}, {0x3A5, 0x3C5},
    {0x3A6, 0x3C6}, {0x3A7, 0x3C7}, {0x3A8, 0x3C8}, {0x3A9, 0x3C9}, {0x3AA, 0x3B9}, {0x3AB, 0x3C5},
    {0x3AC, 0x3B1}, {0x3AD, 0x3B5}, {0x3AE, 0x3B7}, {0x3AF, 0x3B9}, {0x3B0, 0x3C5}, {0x3CA, 0x3B9},
    {0x3CB, 0x3C5}, {0x3CC, 0x3BF}, {0x3CD, 0x3C5}, {0x3CE, 0x3C9}, {0x3CF, 0x3D7}, {0x3D3, 0x3D2},
    {0x3D4, 0x3D2}, {0x3D8, 0x3D9}, {0x3DA, 0x3DB}, {0x3DC, 0x3DD}, {0x3DE, 0x3DF}, {0x3E0, 0x3E1},
    {0x3E2, 0x3E3}, {0x3E4, 0x3E5}, {0x3E6, 0x3E7}, {0x3E8, 0x3E9}, {0x3EA, 0x3EB}, {0x3EC, 0x3ED},
    {0x3EE, 0x3EF}, {0x3F4, 0x3B8}, {0x3F7, 0x3F8}, {0x3F9, 0x3F2}, {0x3FA, 0x3FB}, {0x3FD, 0x37B},
    {0x3FE, 0x37C}, {0x3FF, 0x37D}, {0x400, 0x435}, {0x401, 0x435}, {0x402, 0x452}, {0x403, 0x433},
    {0x404, 0x454}, {0x405, 0x455}, {0x406, 0x456}, {0x407, 0x456}, {0x408, 0x458}, {0x409, 0x459},
    {0x40A, 0x45A}, {0x40B, 0x45B}, {0x40C, 0x43A}, {0x40D, 0x438}, {0x40E, 0x443}, {0x40F, 0x45F},
    {0x410, 0x430}, {0x411, 0x431}, {0x412, 0x432}, {0x413, 0x433}, {0x414, 0x434}, {0x415, 0x435},
    {0x416, 0x436}, {0x417, 0x437}, {0x418, 0x438}, {0x419, 0x438}, {0x41A, 0x43A}, {0x41B, 0x43B},
    {0x41C, 0x43C}, {0x41D, 0x43D}, {0x41E, 0x43E}, {0x41F, 0x43F}, {0x420, 0x440}, {0x421, 0x441},
    {0x422, 0x442}, {0x423, 0x443}, {0x424, 0x444}, {0x425, 0x445}, {0x426, 0x446}, {0x427, 0x447},
    {0x428, 0x448}, {0x429, 0x449}, {0x42A, 0x44A}, {0x42B, 0x44B}, {0x42C, 0x44C}, {0x42D, 0x44D},
    {0x42E, 0x44E}, {0x42F, 0x44F}, {0x439, 0x438}, {0x450, 0x435}, {0x451, 0x435}, {0x453, 0x433},
    {0x457, 0x456}, {0x45C, 0x43A}, {0x45D, 0x438}, {0x45E, 0x443}, {0x460, 0x461}, {0x462, 0x463},
    {0x464, 0x465}, {0x466, 0x467}, {0x468, 0x469}, {0x46A, 0x46B}, {0x46C, 0x46D}, {0x46E, 0x46F},
    {0x470, 0x471}, {0x472, 0x473}, {0x474, 0x475}, {0x476, 0x475}, {0x477, 0x475}, {0x478, 0x479},
    {0x47A, 0x47B}, {0x47C, 0x47D}, {0x47E, 0x47F}, {0x480, 0x481}, {0x483, 0x0}, {0x484, 0x0},
    {0x485, 0x0}, {0x486, 0x0}, {0x487, 0x0}, {0x48A, 0x48B}, {0x48C, 0x48D}, {0x48E, 0x48F},
    {0x490, 0x491}, {0x492, 0x493}, {0x494, 0x495}, {0x496, 0x497}, {0x498, 0x499}, {0x49A, 0x49B},
    {0x49C, 0x49D}, {0x49E, 0x49F}, {0x4A0, 0x4A1}, {0x4A2, 0x4A3}, {0x4A4, 0x4A5}, {0x4A6, 0x4A7},
    {0x4A8, 0x4A9}, {0x4AA, 0x4AB}, {0x4AC, 0x4AD}, {0x4AE, 0x4AF}, {0x4B0, 0x4B1}, {0x4B2, 0x4B3},
    {0x4B4, 0x4B5}, {0x4B6, 0x4B7}, {0x4B8, 0x4B9}, {0x4BA, 0x4BB}, {0x4BC, 0x4BD}, {0x4BE, 0x4BF},
    {0x4C0, 0x4CF}, {0x4C1, 0x436}, {0x4C2, 0x436}, {0x4C3, 0x4C4}, {0x4C5, 0x4C6}, {0x4C7, 0x4C8},
    {0x4C9, 0x4CA}, {0x4CB, 0x4CC}, {0x4CD, 0x4CE}, {0x4D0, 0x430}, {0x4D1, 0x430}, {0x4D2, 0x430},
    {0x4D3, 0x430}, {0x4D4, 0x4D5}, {0x4D6, 0x435}, {0x4D7, 0x435}, {0x4D8, 0x4D9}, {0x4DA, 0x4D9},
    {0x4DB, 0x4D9}, {0x4DC, 0x436}, {0x4DD, 0x436}, {0x4DE, 0x437}, {0x4DF, 0x437}, {0x4E0, 0x4E1},
    {0x4E2, 0x438}, {0x4E3, 0x438}, {0x4E4, 0x438}, {0x4E5, 0x438}, {0x4E6, 0x43E}, {0x4E7, 0x43E},
    {0x4E8, 0x4E9}, {0x4EA, 0x4E9}, {0x4EB, 0x4E9}, {0x4EC, 0x44D}, {0x4ED, 0x44D}, {0x4EE, 0x443},
    {0x4EF, 0x443}, {0x4F0, 0x443}, {0x4F1, 0x443}, {0x4F2, 0x443}, {0x4F3, 0x443}, {0x4F4, 0x447},
    {0x4F5, 0x447}, {0x4F6, 0x4F7}, {0x4F8, 0x44B}, {0x4F9, 0x44B}, {0x4FA, 0x4FB}, {0x4FC, 0x4FD},
    {0x4FE, 0x4FF}, {0x500, 0x501}, {0x502, 0x503}, {0x504, 0x505}, {0x506, 0x507}, {0x508, 0x509},
    {0x50A, 0x50B}, {0x50C, 0x50D}, {0x50E, 0x50F}, {0x510, 0x511}, {0x512, 0x513}, {0x514, 0x515},
    {0x516, 0x517}, {0x518, 0x519}, {0x51A, 0x51B}, {0x51C, 0x51D}, {0x51E, 0x51F}, {0x520, 0x521},
    {0x522, 0x523}, {0x524, 0x525}, {0x526, 0x527}, {0x528, 0x529}, {0x52A, 0x52B}, {0x52C, 0x52D},
    {0x52E, 0x52F},
};

}  // namespace

char32_t fold_code_point(char32_t cp) {
  if (cp < 0x80) return (cp >= 'A' && cp <= 'Z') ? cp + 32 : cp;
  if (cp >= 0x300 && cp <= 0x36F) return 0;
  const auto* end = std::end(kFold);
  const auto* it = std::lower_bound(std::begin(kFold), end, cp,
                                    [](const auto& entry, char32_t key) { return entry.first < key; });
  return (it != end && it->first == cp) ? it->second : cp;
}

}  // namespace covex::text
