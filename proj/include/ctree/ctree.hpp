#ifndef CTREE_CTREE_HPP
#define CTREE_CTREE_HPP

#include "ctree/affinity.hpp"
#include "ctree/clustering.hpp"
#include "ctree/dataset.hpp"
#include "ctree/error.hpp"
#include "ctree/evaluation.hpp"
#include "ctree/flat_multiclass.hpp"
#include "ctree/hierarchy.hpp"
#include "ctree/linear_svm.hpp"
#include "ctree/pipeline.hpp"
#include "ctree/prediction.hpp"

#endif // CTREE_CTREE_HPP
