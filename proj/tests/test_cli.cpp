namespace pidlab {}
