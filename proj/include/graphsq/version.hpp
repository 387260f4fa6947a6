#pragma once

namespace graphsq
{
    inline constexpr const char* version = "1.0.0";
}
