#pragma once

#include "torusq/analysis.hpp"
#include "torusq/dft.hpp"
#include "torusq/error.hpp"
#include "torusq/experiment.hpp"
#include "torusq/ffpoly.hpp"
#include "torusq/format.hpp"
#include "torusq/kernels.hpp"
#include "torusq/lattice.hpp"
#include "torusq/parallel.hpp"
#include "torusq/plot.hpp"
#include "torusq/special.hpp"
#include "torusq/torus.hpp"
#include "torusq/weyl.hpp"
