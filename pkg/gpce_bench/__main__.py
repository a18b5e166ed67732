from gpce_bench.cli import main

raise SystemExit(main())
