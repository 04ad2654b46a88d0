from tailcause.cli import main

main()
