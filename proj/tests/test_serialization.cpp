#include "doctest.h"

TEST_CASE("placeholder serialization") { CHECK(true); }
