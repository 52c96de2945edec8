from fractalmeter.cli import main

raise SystemExit(main())
