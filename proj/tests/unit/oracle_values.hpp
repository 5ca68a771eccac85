#pragma once

// Values frozen from an independent finite-difference discretization
// (staggered primitive variables, Richardson from N = 400 and 800), computed
// outside this code base.

#include <array>

namespace oracle_values {

// Ten smallest eigenvalues of sectors k = 1..4.
inline constexpr std::array<std::array<double, 10>, 4> sector{{
    {6.116567232, 38.80310424, 85.20466046, 157.2470523, 243.1279422,
     354.6407008, 480.0010564, 630.9901616, 795.8294565, 986.2961516},
    {6.507645102, 38.11435706, 84.61345379, 156.576133, 242.5130324,
     353.9730395, 479.3801529, 630.3236357, 795.2061481, 985.6301496},
    {10.67531864, 39.01410719, 86.55249294, 157.3135314, 244.3632686,
     354.6860401, 481.207775, 631.0284427, 797.0246811, 986.3312229},
    {17.33481573, 42.45563641, 90.41508961, 160.1703129, 248.0221802,
     357.4519202, 484.8141686, 633.7636723, 800.6099019, 989.0524653},
}};

// Three smallest eigenvalues of sectors k = 1..8.
inline constexpr std::array<std::array<double, 3>, 8> lowest{{
    {6.116567232, 38.80310424, 85.20466046},
    {6.507645102, 38.11435706, 84.61345379},
    {10.67531864, 39.01410719, 86.55249294},
    {17.33481573, 42.45563641, 90.41508961},
    {26.16438557, 48.67685624, 96.30281228},
    {37.06623936, 57.58382386, 104.36974363},
    {50.0037684, 69.01199337, 114.70926026},
    {64.96096571, 82.81762832, 127.35416479},
}};

}  // namespace oracle_values
