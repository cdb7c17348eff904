#pragma once

#include "nodeinj/attack.hpp"
#include "nodeinj/bench.hpp"
#include "nodeinj/error.hpp"
#include "nodeinj/gin.hpp"
#include "nodeinj/graph.hpp"
#include "nodeinj/graph_io.hpp"
#include "nodeinj/injector.hpp"
#include "nodeinj/matrix.hpp"
#include "nodeinj/remote.hpp"
#include "nodeinj/seed.hpp"
#include "nodeinj/tu_format.hpp"
#include "nodeinj/victim.hpp"
#include "nodeinj/wire.hpp"
