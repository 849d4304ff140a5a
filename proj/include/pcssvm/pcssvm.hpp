#pragma once

#include "pcssvm/error.hpp"
#include "pcssvm/dataset.hpp"
#include "pcssvm/kernel.hpp"
#include "pcssvm/smo.hpp"
#include "pcssvm/cluster_pdf.hpp"
#include "pcssvm/resampling.hpp"
#include "pcssvm/pcs.hpp"
#include "pcssvm/metrics.hpp"
#include "pcssvm/model_io.hpp"
#include "pcssvm/harness.hpp"
