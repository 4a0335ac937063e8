# Copyright spatial-cge-py Contributors
# SPDX-License-Identifier: Apache-2.0
