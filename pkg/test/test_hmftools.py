#
#  Licensed under the Apache License, Version 2.0 (the "License");
#  you may not use this file except in compliance with the License.
#  You may obtain a copy of the License at
#
#         http://www.apache.org/licenses/LICENSE-2.0.txt
#
#  Unless required by applicable law or agreed to in writing, software
#  distributed under the License is distributed on an "AS IS" BASIS,
#  WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
#  See the License for the specific language governing permissions and
#  limitations under the License.
#

import hmftools


def test_hmftools_version():
    assert hmftools.__version__ != "unknown"

    from packaging.version import parse, Version

    assert isinstance(parse(hmftools.__version__), Version)


def test_hmftools_public_api():
    for name in hmftools.__all__:
        assert hasattr(hmftools, name), name
