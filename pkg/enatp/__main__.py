import sys

from enatp.main import main

sys.exit(main())
