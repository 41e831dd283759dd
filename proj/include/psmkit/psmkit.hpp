#pragma once

#include "psmkit/common.hpp"
#include "psmkit/csv.hpp"
#include "psmkit/gibbs.hpp"
#include "psmkit/hierarchical.hpp"
#include "psmkit/kernel_kmeans.hpp"
#include "psmkit/metrics.hpp"
#include "psmkit/mkkm.hpp"
#include "psmkit/pipeline.hpp"
#include "psmkit/psm.hpp"
#include "psmkit/silhouette.hpp"
#include "psmkit/simplemkl.hpp"
#include "psmkit/simplex.hpp"
#include "psmkit/svm.hpp"
#include "psmkit/synthetic.hpp"
